#include "rayfp/geometry.hpp"

#include <numbers>

namespace rayfp {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_direction: return "invalid direction";
    case Errc::invalid_length: return "invalid length";
    case Errc::invalid_count: return "invalid count";
    case Errc::unsupported_scheme: return "unsupported scheme";
    case Errc::out_of_bounds: return "out of bounds";
    case Errc::invalid_parameter: return "invalid parameter";
    case Errc::parse_error: return "parse error";
    case Errc::schema_error: return "schema error";
    case Errc::shape_error: return "shape error";
    case Errc::label_out_of_range: return "label out of range";
    case Errc::empty_dataset: return "empty dataset";
    case Errc::io_error: return "i/o error";
  }
  return "error";
}

std::string to_string(DirectionScheme scheme) {
  switch (scheme) {
    case DirectionScheme::evenly_spaced_2d: return "evenly-spaced-2d";
    case DirectionScheme::axes_3d: return "axes-3d";
    case DirectionScheme::fibonacci_3d: return "fibonacci-3d";
    case DirectionScheme::explicit_set: return "explicit";
  }
  return "explicit";
}

DirectionScheme direction_scheme_from_string(const std::string& name) {
  if (name == "evenly-spaced-2d") return DirectionScheme::evenly_spaced_2d;
  if (name == "axes-3d") return DirectionScheme::axes_3d;
  if (name == "fibonacci-3d") return DirectionScheme::fibonacci_3d;
  if (name == "explicit") return DirectionScheme::explicit_set;
  throw Error(Errc::unsupported_scheme, "unknown direction scheme '" + name + "'");
}

DirectionSet::DirectionSet(Eigen::MatrixXd directions, DirectionScheme scheme, double offset_angle)
    : dirs_(std::move(directions)), scheme_(scheme), offset_angle_(offset_angle) {
  if (dirs_.cols() < 1) throw Error(Errc::invalid_count, "a direction set needs M >= 1");
  if (dirs_.rows() < 1) throw Error(Errc::shape_error, "directions need N >= 1");
  for (Eigen::Index m = 0; m < dirs_.cols(); ++m) {
    if (!dirs_.col(m).allFinite() || std::abs(dirs_.col(m).norm() - 1.0) > kUnitNormTolerance) {
      throw Error(Errc::invalid_direction, "direction " + std::to_string(m) + " is not unit length");
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      if ((dirs_.col(m) - dirs_.col(j)).norm() < 1e-12) {
        throw Error(Errc::invalid_direction, "directions " + std::to_string(j) + " and " +
                                                 std::to_string(m) + " coincide");
      }
    }
  }
}

DirectionSet evenly_spaced_directions_2d(int count, double offset_angle) {
  if (count < 1) throw Error(Errc::invalid_count, "M must be >= 1");
  Eigen::MatrixXd d(2, count);
  for (int k = 0; k < count; ++k) {
    const double a = offset_angle + 2.0 * std::numbers::pi * k / count;
    d(0, k) = std::cos(a);
    d(1, k) = std::sin(a);
  }
  return DirectionSet(std::move(d), DirectionScheme::evenly_spaced_2d, offset_angle);
}

DirectionSet directions_3d(int count, DirectionScheme scheme) {
  if (count < 1) throw Error(Errc::invalid_count, "M must be >= 1");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, count);
  switch (scheme) {
    case DirectionScheme::axes_3d:
      if (count != 6) throw Error(Errc::unsupported_scheme, "axes-3d requires M = 6");
      for (int a = 0; a < 3; ++a) {
        d(a, 2 * a) = 1.0;
        d(a, 2 * a + 1) = -1.0;
      }
      break;
    case DirectionScheme::fibonacci_3d: {
      const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < count; ++i) {
        const double y = 1.0 - 2.0 * (i + 0.5) / count;
        const double rad = std::sqrt(std::max(0.0, 1.0 - y * y));
        const double phi = golden * i;
        Eigen::Vector3d v(rad * std::cos(phi), y, rad * std::sin(phi));
        d.col(i) = v.normalized();
      }
      break;
    }
    default:
      throw Error(Errc::unsupported_scheme, "not a 3D scheme: " + to_string(scheme));
  }
  return DirectionSet(std::move(d), scheme);
}

DirectionSet default_directions(int dims, int count, double offset_angle) {
  if (dims == 2) return evenly_spaced_directions_2d(count, offset_angle);
  if (dims == 3) {
    return directions_3d(count, count == 6 ? DirectionScheme::axes_3d : DirectionScheme::fibonacci_3d);
  }
  throw Error(Errc::unsupported_scheme, "no default direction layout for N = " + std::to_string(dims));
}

DirectionSet explicit_directions(const Eigen::MatrixXd& directions) {
  return DirectionSet(directions, DirectionScheme::explicit_set);
}

}  // namespace rayfp
