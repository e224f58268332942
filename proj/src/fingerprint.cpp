#include "rayfp/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rayfp {

WeightFunction WeightFunction::reciprocal() { return WeightFunction(Kind::reciprocal, 0.0, {}); }

WeightFunction WeightFunction::exponential(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(Errc::invalid_parameter, "exponential weight needs lambda > 0");
  }
  return WeightFunction(Kind::exponential, lambda, {});
}

WeightFunction WeightFunction::table(std::vector<double> values) {
  if (values.empty()) throw Error(Errc::invalid_parameter, "weight table is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 1.0)) throw Error(Errc::invalid_parameter, "weight table entries must be in [0, 1]");
    if (i > 0 && values[i] > values[i - 1]) throw Error(Errc::invalid_parameter, "weight table must be non-increasing");
  }
  return WeightFunction(Kind::table, 0.0, std::move(values));
}

WeightFunction WeightFunction::parse(const std::string& text) {
  if (text == "reciprocal") return reciprocal();
  try {
    if (text.rfind("exponential:", 0) == 0) return exponential(std::stod(text.substr(12)));
    if (text.rfind("table:", 0) == 0) {
      std::vector<double> values;
      std::stringstream in(text.substr(6));
      std::string item;
      while (std::getline(in, item, ',')) values.push_back(std::stod(item));
      return table(std::move(values));
    }
  } catch (const std::logic_error&) {
    // fall through to the error below
  }
  throw Error(Errc::invalid_parameter, "unknown weight function '" + text + "'");
}

double WeightFunction::operator()(double distance) const {
  switch (kind_) {
    case Kind::reciprocal:
      return distance < 1.0 ? 1.0 : 1.0 / distance;
    case Kind::exponential:
      return std::exp(-lambda_ * std::max(distance, 0.0));
    case Kind::table: {
      const double slot = std::max(1.0, std::ceil(distance));
      if (slot > static_cast<double>(values_.size())) return 0.0;
      return values_[static_cast<std::size_t>(slot) - 1];
    }
  }
  return 0.0;
}

std::string WeightFunction::describe() const {
  std::ostringstream out;
  out.precision(17);
  switch (kind_) {
    case Kind::reciprocal:
      return "reciprocal";
    case Kind::exponential:
      out << "exponential:" << lambda_;
      return out.str();
    case Kind::table:
      out << "table:";
      for (std::size_t i = 0; i < values_.size(); ++i) out << (i ? "," : "") << values_[i];
      return out.str();
  }
  return "reciprocal";
}

FeatureScan detect_features(const Scene& scene, const Ray& ray, int r) {
  if (r < 1) throw Error(Errc::invalid_length, "ray length must be >= 1 px");
  if (ray.origin().size() != scene.dims()) throw Error(Errc::shape_error, "ray dimension does not match scene");
  if (!scene.contains(ray.origin())) throw Error(Errc::out_of_bounds, "ray origin lies outside the scene extent");

  FeatureScan scan;
  CellId previous = scene.cell_id(ray.origin());
  for (int k = 1; k <= r; ++k) {
    const Eigen::VectorXd x = ray.sample(k);
    // The extent is convex, so once a sample leaves it the rest of the ray does too.
    if (!scene.contains(x)) {
      scan.truncated = true;
      break;
    }
    const CellId current = scene.cell_id(x);
    if (current != previous) scan.features.distances_px.push_back(k);
    previous = current;
  }
  return scan;
}

double critical_weight(const FeatureSet& features, const WeightFunction& gamma) {
  if (features.empty()) return 0.0;
  return gamma(static_cast<double>(features.distances_px.front()));
}

Fingerprint fingerprint_point(const Scene& scene, const Point& center, const DirectionSet& dirs, int r,
                              const WeightFunction& gamma) {
  if (center.size() != scene.dims() || dirs.dims() != scene.dims()) {
    throw Error(Errc::shape_error, "center, directions and scene must share a dimension");
  }
  if (!scene.contains(center)) throw Error(Errc::out_of_bounds, "fingerprint center lies outside the scene extent");

  Fingerprint fp;
  fp.weights.resize(dirs.count());
  for (int m = 0; m < dirs.count(); ++m) {
    const Ray ray = make_ray(center, dirs[m], r);
    const FeatureScan scan = detect_features(scene, ray, r);
    fp.weights[m] = critical_weight(scan.features, gamma);
    fp.truncated = fp.truncated || scan.truncated;
  }
  return fp;
}

}  // namespace rayfp
