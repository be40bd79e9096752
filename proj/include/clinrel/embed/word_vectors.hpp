#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clinrel/corpus/document.hpp"
#include "clinrel/matrix.hpp"

namespace clinrel {

/// Static word vectors in the common `count dim` text format. Lookup is
/// exact-match; unknown tokens map to the zero vector.
class WordVectorTable {
 public:
  WordVectorTable() = default;
  explicit WordVectorTable(std::size_t dim) : dim_(dim), zero_(dim, 0.0) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return index_.size(); }
  bool contains(std::string_view token) const;

  /// Adds or replaces an entry. Throws ShapeError on a width mismatch.
  void insert(std::string token, std::span<const double> vector);

  std::span<const double> lookup(std::string_view token) const;

  /// T x dim matrix of the document's token vectors.
  Matrix embed(const Document& doc) const;

  void write(std::ostream& out) const;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> order_;
  std::vector<double> storage_;
  std::vector<double> zero_;
};

/// Throws ParseError with the offending line on any format violation.
WordVectorTable load_word_vectors(std::istream& in);
WordVectorTable load_word_vectors_file(const std::filesystem::path& path);

}  // namespace clinrel
