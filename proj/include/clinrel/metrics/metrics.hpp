#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clinrel/corpus/document.hpp"

namespace clinrel {

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  friend Counts operator+(Counts a, const Counts& b) { return a += b; }
  friend bool operator==(const Counts&, const Counts&) = default;
};

enum class MatchMode { Strict, Lenient };

std::string_view to_string(MatchMode m) noexcept;

/// Counts per entity kind; both kinds are always present.
using KindCounts = std::map<EntityKind, Counts>;

/// Greedy one-to-one matching in position order. Strict needs an identical
/// kind and range, lenient a same-kind overlap of at least one token.
KindCounts match_spans(std::span<const EntitySpan> predicted, std::span<const EntitySpan> gold, MatchMode mode);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

/// 0/0 is taken as 0 throughout.
Prf prf(const Counts& c, double beta = 1.0);

struct Averages {
  Prf micro;
  Prf macro;
};

Averages aggregate(std::span<const Counts> per_class, double beta = 1.0);

/// Per-class counts {positive, negative} for a two-class labelling where every
/// item gets exactly one label.
std::array<Counts, 2> binary_class_counts(const std::vector<bool>& predicted, const std::vector<bool>& gold);

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// One point per distinct score, thresholds descending; an item is positive
/// when its score >= threshold. Throws DegenerateCurveError without positives.
std::vector<PrPoint> pr_curve(std::span<const double> scores, const std::vector<bool>& labels);

struct ThresholdChoice {
  double threshold = 0.0;
  double f = 0.0;
};

/// The distinct score maximising F-beta; ties go to the highest threshold.
ThresholdChoice select_threshold(std::span<const double> scores, const std::vector<bool>& labels, double beta);

enum class GroupMode { Easy, Hard };

std::string_view to_string(GroupMode m) noexcept;

/// (drug id, disorder id) in gold entity ids.
using PairKey = std::pair<std::string, std::string>;

struct GroupTally {
  std::size_t detected = 0;
  std::size_t total = 0;
  GroupTally& operator+=(const GroupTally& o) {
    detected += o.detected;
    total += o.total;
    return *this;
  }
};

GroupTally count_groups(const std::set<PairKey>& predicted, const Document& doc, GroupMode mode);

/// Detected fraction of the document's ADE groups. Throws UndefinedMetricError without groups.
double evaluate_groups(const std::set<PairKey>& predicted, const Document& doc, GroupMode mode);

struct DocumentScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double specificity = 0.0;
};

DocumentScores evaluate_documents(const std::vector<bool>& predicted, const std::vector<bool>& gold);

struct Summary {
  double mean = 0.0;
  double std = 0.0;
};

/// Mean and sample (n-1) standard deviation. Throws SizingError for fewer than two values.
Summary cv_summary(std::span<const double> values);

struct ReportRow {
  std::string model;
  std::string task;
  std::string mode;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
};

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows);
std::vector<ReportRow> read_report_csv(std::istream& in);
void write_pr_curve_csv(std::ostream& out, std::span<const PrPoint> points);

}  // namespace clinrel
