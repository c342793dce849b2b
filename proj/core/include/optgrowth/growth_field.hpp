#pragma once

#include <Eigen/Core>

#include "optgrowth/types.hpp"

namespace optgrowth {

/// Piecewise-constant growth tensor in vector form.
///
/// Element e occupies entries (3e, 3e+1, 3e+2) = (Eg11, Eg22, 2 Eg12), the
/// same engineering-shear convention used for strains.
class GrowthField {
 public:
  GrowthField() = default;
  explicit GrowthField(Index num_elements) : values_(Vector::Zero(3 * num_elements)) {}
  explicit GrowthField(Vector values) : values_(std::move(values)) {
    if (values_.size() % 3 != 0) {
      throw ValidationError("GrowthField: length " + std::to_string(values_.size()) +
                            " is not a multiple of 3");
    }
  }

  Index num_elements() const { return values_.size() / 3; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  Eigen::Vector3d element(Index e) const { return values_.segment<3>(3 * e); }
  void set_element(Index e, const Eigen::Vector3d& g) { values_.segment<3>(3 * e) = g; }

  bool all_finite() const { return values_.allFinite(); }

 private:
  Vector values_;
};

}  // namespace optgrowth
