#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rayfp/geometry.hpp"
#include "rayfp/scene.hpp"

namespace rayfp {

/// Decreasing weight gamma: R+ -> [0, 1] applied to feature distances.
class WeightFunction {
 public:
  enum class Kind { reciprocal, exponential, table };

  /// gamma(d) = 1 / d, clamped to 1 for d < 1.
  static WeightFunction reciprocal();
  /// gamma(d) = exp(-lambda * d).
  static WeightFunction exponential(double lambda);
  /// gamma(d) = values[ceil(d) - 1], 0 past the end. Values must be
  /// non-increasing and within [0, 1].
  static WeightFunction table(std::vector<double> values);

  /// Parses "reciprocal", "exponential:<lambda>" or "table:<v1>,<v2>,...".
  static WeightFunction parse(const std::string& text);

  double operator()(double distance) const;

  Kind kind() const noexcept { return kind_; }
  std::string describe() const;

 private:
  WeightFunction(Kind kind, double lambda, std::vector<double> values)
      : kind_(kind), lambda_(lambda), values_(std::move(values)) {}

  Kind kind_;
  double lambda_;
  std::vector<double> values_;
};

/// Crossing distances along one ray, strictly increasing, each in 1..r.
struct FeatureSet {
  std::vector<int> distances_px;

  bool empty() const noexcept { return distances_px.empty(); }
  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

struct FeatureScan {
  FeatureSet features;
  // Set when the ray left the extent and the trailing samples were dropped.
  bool truncated = false;
};

struct Fingerprint {
  Eigen::VectorXd weights;
  bool truncated = false;

  int size() const noexcept { return static_cast<int>(weights.size()); }
};

/// Every k in 1..r whose sample lies in a different cell than sample k-1
/// (sample 0 is the origin).
FeatureScan detect_features(const Scene& scene, const Ray& ray, int r);

/// gamma of the nearest feature; 0 for an empty set.
double critical_weight(const FeatureSet& features, const WeightFunction& gamma);

/// Critical weights of the M rays of length r cast from `center`, in
/// direction-set order.
Fingerprint fingerprint_point(const Scene& scene, const Point& center, const DirectionSet& dirs, int r,
                              const WeightFunction& gamma);

}  // namespace rayfp
