#include "relcheck/dataset.hpp"

#include <algorithm>
#include <string>

#include "relcheck/errors.hpp"

namespace relcheck {

void Dataset::validate() const {
  if (X.rows != labels.size()) {
    throw DimensionError("dataset has " + std::to_string(X.rows) + " rows but " +
                         std::to_string(labels.size()) + " labels");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
      throw UsageError("label " + std::to_string(y) + " outside [0, " + std::to_string(class_count) + ")");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.class_count = class_count;
  out.X = Matrix(indices.size(), X.cols);
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t src = indices[r];
    if (src >= size()) throw DimensionError("subset index out of range");
    std::copy_n(X.row(src).begin(), X.cols, out.X.row(r).begin());
    out.labels.push_back(labels[src]);
  }
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.dim() != b.dim()) throw DimensionError("cannot concatenate datasets of different width");
  if (a.class_count != b.class_count) throw DimensionError("cannot concatenate datasets with different class counts");
  Dataset out = a;
  out.X.rows += b.X.rows;
  out.X.data.insert(out.X.data.end(), b.X.data.begin(), b.X.data.end());
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

}  // namespace relcheck
