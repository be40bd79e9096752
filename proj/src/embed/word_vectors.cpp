#include "clinrel/embed/word_vectors.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "clinrel/error.hpp"

namespace clinrel {

bool WordVectorTable::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

void WordVectorTable::insert(std::string token, std::span<const double> vector) {
  if (vector.size() != dim_)
    throw ShapeError("word vector for '" + token + "' has " + std::to_string(vector.size()) +
                     " values, table dim is " + std::to_string(dim_));
  auto it = index_.find(token);
  if (it != index_.end()) {
    std::copy(vector.begin(), vector.end(), storage_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
    return;
  }
  index_.emplace(token, order_.size());
  order_.push_back(std::move(token));
  storage_.insert(storage_.end(), vector.begin(), vector.end());
}

std::span<const double> WordVectorTable::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return zero_;
  return {storage_.data() + it->second * dim_, dim_};
}

Matrix WordVectorTable::embed(const Document& doc) const {
  Matrix m(doc.tokens.size(), dim_);
  for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
    auto v = lookup(doc.tokens[t].text);
    std::copy(v.begin(), v.end(), m.row(t).begin());
  }
  return m;
}

void WordVectorTable::write(std::ostream& out) const {
  out << order_.size() << ' ' << dim_ << '\n';
  char buf[64];
  for (std::size_t i = 0; i < order_.size(); ++i) {
    out << order_[i];
    for (std::size_t d = 0; d < dim_; ++d) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, storage_[i * dim_ + d]);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(end - buf));
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

template <typename T>
T parse_number(std::string_view s, std::size_t line, const char* what) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(std::string("invalid ") + what + " '" + std::string(s) + "'", line);
  return v;
}

}  // namespace

WordVectorTable load_word_vectors(std::istream& in) {
  std::string text;
  if (!std::getline(in, text)) throw EmptyInputError();
  auto header = split_spaces(text);
  if (header.size() != 2) throw ParseError("header must be 'count dim'", 1);
  const auto count = parse_number<std::size_t>(header[0], 1, "count");
  const auto dim = parse_number<std::size_t>(header[1], 1, "dim");
  if (dim == 0) throw ParseError("dim must be positive", 1);

  WordVectorTable table(dim);
  std::vector<double> values(dim);
  std::size_t line = 1;
  std::size_t read = 0;
  while (read < count && std::getline(in, text)) {
    ++line;
    auto fields = split_spaces(text);
    if (fields.empty()) continue;
    if (fields.size() != dim + 1)
      throw ParseError("expected token plus " + std::to_string(dim) + " values, got " +
                           std::to_string(fields.size() - 1),
                       line);
    for (std::size_t d = 0; d < dim; ++d) values[d] = parse_number<double>(fields[d + 1], line, "value");
    if (table.contains(fields[0])) throw ParseError("duplicate token '" + std::string(fields[0]) + "'", line);
    table.insert(std::string(fields[0]), values);
    ++read;
  }
  if (read != count)
    throw ParseError("header declares " + std::to_string(count) + " entries, found " + std::to_string(read),
                     line);
  while (std::getline(in, text)) {
    ++line;
    if (!split_spaces(text).empty()) throw ParseError("entries beyond the declared count", line);
  }
  return table;
}

WordVectorTable load_word_vectors_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return load_word_vectors(in);
}

}  // namespace clinrel
