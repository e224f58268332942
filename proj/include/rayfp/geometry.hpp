#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rayfp/error.hpp"

namespace rayfp {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// A location in pixel (2D) or voxel (3D) units.
using Point = Eigen::VectorXd;

inline constexpr double kUnitNormTolerance = 1e-12;

/// Unit vector on S^{N-1}. Construction fails unless the input already has
/// unit norm; use normalized() to build one from an arbitrary vector.
template <typename Scalar>
class BasicDirection {
 public:
  explicit BasicDirection(VectorX<Scalar> components) : v_(std::move(components)) {
    if (v_.size() < 1 || !v_.allFinite() ||
        std::abs(v_.norm() - Scalar(1)) > Scalar(kUnitNormTolerance)) {
      throw Error(Errc::invalid_direction, "direction must be a finite unit vector");
    }
  }

  static BasicDirection normalized(const VectorX<Scalar>& v) {
    const Scalar n = v.norm();
    if (!(n > Scalar(0)) || !v.allFinite()) {
      throw Error(Errc::invalid_direction, "cannot normalize a zero or non-finite vector");
    }
    VectorX<Scalar> u = v / n;
    return BasicDirection(std::move(u));
  }

  const VectorX<Scalar>& vector() const noexcept { return v_; }
  Eigen::Index dims() const noexcept { return v_.size(); }

 private:
  VectorX<Scalar> v_;
};

/// The segment {(1-t) origin + t terminus : t in [0,1]} of integer pixel length.
template <typename Scalar>
class BasicRay {
 public:
  BasicRay(VectorX<Scalar> origin, BasicDirection<Scalar> direction, int length_px)
      : origin_(std::move(origin)), direction_(std::move(direction)), length_(length_px) {
    terminus_ = origin_ + Scalar(length_) * direction_.vector();
  }

  const VectorX<Scalar>& origin() const noexcept { return origin_; }
  const VectorX<Scalar>& terminus() const noexcept { return terminus_; }
  const BasicDirection<Scalar>& direction() const noexcept { return direction_; }
  int length_px() const noexcept { return length_; }

  VectorX<Scalar> point_at(Scalar t) const { return (Scalar(1) - t) * origin_ + t * terminus_; }

  /// origin + k * direction; sample k of the pixel walk.
  VectorX<Scalar> sample(int k) const { return origin_ + Scalar(k) * direction_.vector(); }

 private:
  VectorX<Scalar> origin_;
  BasicDirection<Scalar> direction_;
  int length_;
  VectorX<Scalar> terminus_;
};

using Direction = BasicDirection<double>;
using Ray = BasicRay<double>;

template <typename Scalar>
BasicRay<Scalar> make_ray(const VectorX<Scalar>& origin, const BasicDirection<Scalar>& direction,
                          int length_px) {
  if (length_px < 1) throw Error(Errc::invalid_length, "ray length must be >= 1 px");
  if (!origin.allFinite()) throw Error(Errc::invalid_parameter, "ray origin must be finite");
  if (origin.size() != direction.dims()) {
    throw Error(Errc::shape_error, "origin and direction dimensions differ");
  }
  return BasicRay<Scalar>(origin, direction, length_px);
}

/// Points at integer distances 1..r from the origin. The origin itself is
/// not included.
template <typename Scalar>
std::vector<VectorX<Scalar>> ray_samples(const BasicRay<Scalar>& ray, int r) {
  if (r < 1) throw Error(Errc::invalid_length, "sample count must be >= 1");
  std::vector<VectorX<Scalar>> out;
  out.reserve(static_cast<std::size_t>(r));
  for (int k = 1; k <= r; ++k) out.push_back(ray.sample(k));
  return out;
}

enum class DirectionScheme { evenly_spaced_2d, axes_3d, fibonacci_3d, explicit_set };

std::string to_string(DirectionScheme scheme);
DirectionScheme direction_scheme_from_string(const std::string& name);

/// M unit directions (stored as the columns of an N x M matrix) defining an
/// M-projection.
class DirectionSet {
 public:
  DirectionSet(Eigen::MatrixXd directions, DirectionScheme scheme, double offset_angle = 0.0);

  int dims() const noexcept { return static_cast<int>(dirs_.rows()); }
  int count() const noexcept { return static_cast<int>(dirs_.cols()); }
  DirectionScheme scheme() const noexcept { return scheme_; }
  double offset_angle() const noexcept { return offset_angle_; }

  const Eigen::MatrixXd& matrix() const noexcept { return dirs_; }
  Direction operator[](int m) const { return Direction(dirs_.col(m)); }

 private:
  Eigen::MatrixXd dirs_;
  DirectionScheme scheme_;
  double offset_angle_;
};

/// Direction k has angle offset_angle + 2 pi k / M.
DirectionSet evenly_spaced_directions_2d(int count, double offset_angle = 0.0);

/// axes_3d: {+e1, -e1, +e2, -e2, +e3, -e3} (count must be 6).
/// fibonacci_3d: Fibonacci-sphere lattice of `count` points.
DirectionSet directions_3d(int count, DirectionScheme scheme);

/// Default layout: evenly spaced in 2D; axes for M = 6 and Fibonacci
/// otherwise in 3D.
DirectionSet default_directions(int dims, int count, double offset_angle = 0.0);

DirectionSet explicit_directions(const Eigen::MatrixXd& directions);

/// Measured points for one fingerprint: M * r.
constexpr std::uint64_t pixel_budget(std::uint64_t count, std::uint64_t length_px) noexcept {
  return count * length_px;
}

/// Axis-aligned box [lo, hi] (inclusive).
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int dims() const noexcept { return static_cast<int>(lo.size()); }
  bool contains(const Eigen::VectorXd& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
};

}  // namespace rayfp
