#include "clinrel/metrics/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

#include "clinrel/error.hpp"

namespace clinrel {

std::string_view to_string(MatchMode m) noexcept { return m == MatchMode::Strict ? "strict" : "lenient"; }
std::string_view to_string(GroupMode m) noexcept { return m == GroupMode::Easy ? "easy" : "hard"; }

namespace {

std::vector<const EntitySpan*> by_position(std::span<const EntitySpan> spans) {
  std::vector<const EntitySpan*> v;
  for (const auto& s : spans) v.push_back(&s);
  std::ranges::stable_sort(v, [](const EntitySpan* a, const EntitySpan* b) {
    return std::tie(a->token_start, a->token_end) < std::tie(b->token_start, b->token_end);
  });
  return v;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

KindCounts match_spans(std::span<const EntitySpan> predicted, std::span<const EntitySpan> gold, MatchMode mode) {
  KindCounts out{{EntityKind::Drug, {}}, {EntityKind::Disorder, {}}};
  const auto preds = by_position(predicted);
  const auto golds = by_position(gold);
  std::vector<bool> used(golds.size(), false);
  for (const auto* p : preds) {
    bool hit = false;
    for (std::size_t g = 0; g < golds.size() && !hit; ++g) {
      if (used[g] || golds[g]->kind != p->kind) continue;
      const bool ok = mode == MatchMode::Strict ? golds[g]->same_extent(*p) : golds[g]->overlaps(*p);
      if (ok) used[g] = hit = true;
    }
    ++(hit ? out[p->kind].tp : out[p->kind].fp);
  }
  for (std::size_t g = 0; g < golds.size(); ++g)
    if (!used[g]) ++out[golds[g]->kind].fn;
  return out;
}

Prf prf(const Counts& c, double beta) {
  const double b2 = beta * beta;
  const double tp = static_cast<double>(c.tp);
  // Count form of (1+b2)PR/(b2 P + R); identical whenever tp > 0.
  const double den = (1.0 + b2) * tp + b2 * static_cast<double>(c.fn) + static_cast<double>(c.fp);
  return {ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn), c.tp == 0 ? 0.0 : (1.0 + b2) * tp / den};
}

Averages aggregate(std::span<const Counts> per_class, double beta) {
  Averages a;
  if (per_class.empty()) return a;
  Counts pooled;
  for (const auto& c : per_class) {
    pooled += c;
    const Prf p = prf(c, beta);
    a.macro.precision += p.precision;
    a.macro.recall += p.recall;
    a.macro.f += p.f;
  }
  const double n = static_cast<double>(per_class.size());
  a.macro.precision /= n;
  a.macro.recall /= n;
  a.macro.f /= n;
  a.micro = prf(pooled, beta);
  return a;
}

std::array<Counts, 2> binary_class_counts(const std::vector<bool>& predicted, const std::vector<bool>& gold) {
  if (predicted.size() != gold.size()) throw ShapeError("prediction and gold lists differ in length");
  std::array<Counts, 2> c{};
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool p = predicted[i], g = gold[i];
    if (p && g) {
      ++c[0].tp;
      ++c[1].tn;
    } else if (!p && !g) {
      ++c[1].tp;
      ++c[0].tn;
    } else if (p) {
      ++c[0].fp;
      ++c[1].fn;
    } else {
      ++c[0].fn;
      ++c[1].fp;
    }
  }
  return c;
}

namespace {

struct Sweep {
  double threshold;
  std::size_t tp;
  std::size_t fp;
};

// Cumulative counts at each distinct score, highest first.
std::vector<Sweep> sweep(std::span<const double> scores, const std::vector<bool>& labels, std::size_t& positives) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
  positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  if (positives == 0) throw DegenerateCurveError("precision-recall curve needs at least one positive item");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Sweep> out;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    ++(labels[order[i]] ? tp : fp);
    if (i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]]) out.push_back({scores[order[i]], tp, fp});
  }
  return out;
}

}  // namespace

std::vector<PrPoint> pr_curve(std::span<const double> scores, const std::vector<bool>& labels) {
  std::size_t pos = 0;
  std::vector<PrPoint> out;
  for (const auto& s : sweep(scores, labels, pos))
    out.push_back({s.threshold, ratio(s.tp, s.tp + s.fp), ratio(s.tp, pos)});
  return out;
}

ThresholdChoice select_threshold(std::span<const double> scores, const std::vector<bool>& labels, double beta) {
  std::size_t pos = 0;
  ThresholdChoice best{0.0, -1.0};
  for (const auto& s : sweep(scores, labels, pos)) {
    const double f = prf({s.tp, s.fp, pos - s.tp, 0}, beta).f;
    if (f > best.f) best = {s.threshold, f};
  }
  return best;
}

GroupTally count_groups(const std::set<PairKey>& predicted, const Document& doc, GroupMode mode) {
  GroupTally t;
  for (const auto& g : doc.groups) {
    std::size_t found = 0;
    for (const auto& rid : g.member_relation_ids) {
      const auto* r = doc.find_relation(rid);
      if (r && predicted.contains({r->drug_id, r->disorder_id})) ++found;
    }
    const bool hit = mode == GroupMode::Easy ? found > 0 : found == g.member_relation_ids.size();
    t.detected += hit ? 1 : 0;
    ++t.total;
  }
  return t;
}

double evaluate_groups(const std::set<PairKey>& predicted, const Document& doc, GroupMode mode) {
  const auto t = count_groups(predicted, doc, mode);
  if (t.total == 0) throw UndefinedMetricError("document '" + doc.id + "' has no ADE groups");
  return static_cast<double>(t.detected) / static_cast<double>(t.total);
}

DocumentScores evaluate_documents(const std::vector<bool>& predicted, const std::vector<bool>& gold) {
  const auto c = binary_class_counts(predicted, gold)[0];
  const Prf p = prf(c, 1.0);
  return {p.precision, p.recall, p.f, ratio(c.tn, c.tn + c.fp)};
}

Summary cv_summary(std::span<const double> values) {
  if (values.size() < 2) throw SizingError("fold summary needs at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows) {
  out << "model,task,mode,metric,mean,std\n";
  for (const auto& r : rows) {
    std::ostringstream line;
    line.precision(6);
    line << std::fixed << r.model << ',' << r.task << ',' << r.mode << ',' << r.metric << ',' << r.mean << ','
         << r.std;
    out << line.str() << '\n';
  }
}

std::vector<ReportRow> read_report_csv(std::istream& in) {
  std::vector<ReportRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != "model,task,mode,metric,mean,std") throw ParseError("unexpected report header", 1);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 6) throw ParseError("expected 6 fields", lineno);
    ReportRow r{f[0], f[1], f[2], f[3], 0.0, 0.0};
    for (auto [s, dst] : {std::pair{&f[4], &r.mean}, std::pair{&f[5], &r.std}}) {
      const auto res = std::from_chars(s->data(), s->data() + s->size(), *dst);
      if (res.ec != std::errc{} || res.ptr != s->data() + s->size()) throw ParseError("bad number", lineno);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_pr_curve_csv(std::ostream& out, std::span<const PrPoint> points) {
  out << "threshold,precision,recall\n";
  for (const auto& p : points) {
    std::ostringstream line;
    line.precision(9);
    line << p.threshold << ',' << p.precision << ',' << p.recall;
    out << line.str() << '\n';
  }
}

}  // namespace clinrel
