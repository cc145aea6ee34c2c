#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "relcheck/matrix.hpp"

namespace relcheck {

// Feature rows with integer class labels in [0, class_count).
struct Dataset {
  Matrix X;
  std::vector<int> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return X.cols; }
  bool empty() const { return labels.empty(); }

  // Throws DimensionError/UsageError when rows and labels disagree or a label
  // is out of range.
  void validate() const;

  Dataset subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Rows of b appended to a; dims and class counts must agree.
Dataset concat(const Dataset& a, const Dataset& b);

}  // namespace relcheck
