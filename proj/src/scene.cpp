#include "rayfp/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rayfp/random.hpp"

namespace rayfp {

namespace {

bool same_vector(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

bool same_box(const Box& a, const Box& b) { return same_vector(a.lo, b.lo) && same_vector(a.hi, b.hi); }

constexpr int kCountBits = 16;
constexpr CellId kCountMask = (CellId{1} << kCountBits) - 1;

CellId pack_cell(int region, int n0, int n1, int n2) {
  return (CellId{region} << (3 * kCountBits)) | (CellId{n0} << (2 * kCountBits)) |
         (CellId{n1} << kCountBits) | CellId{n2};
}

int cell_region(CellId c) { return static_cast<int>(c >> (3 * kCountBits)); }
int cell_count(CellId c, int slot) {
  return static_cast<int>((c >> ((2 - slot) * kCountBits)) & kCountMask);
}

Eigen::Vector2d line_normal(double slope) { return Eigen::Vector2d(-slope, 1.0).normalized(); }

// Offsets starting at `first`, stepping by a jittered spacing until past `last`.
std::vector<double> jittered_offsets(double first, double last, const SceneParams& p, Rng& rng) {
  std::vector<double> out;
  double o = first;
  while (o <= last) {
    out.push_back(o);
    o += p.line_spacing_px * (1.0 + p.spacing_jitter_frac * rng.uniform(-1.0, 1.0));
  }
  return out;
}

double max_projection(const Box& box, const Eigen::VectorXd& n) {
  double s = 0.0;
  for (int i = 0; i < box.dims(); ++i) s += std::max(n[i] * box.lo[i], n[i] * box.hi[i]);
  return s;
}

}  // namespace

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::polytope: return "polytope";
    case SceneKind::double_dot: return "double-dot";
    case SceneKind::triple_dot: return "triple-dot";
  }
  return "polytope";
}

SceneKind scene_kind_from_string(const std::string& name) {
  if (name == "polytope") return SceneKind::polytope;
  if (name == "double-dot") return SceneKind::double_dot;
  if (name == "triple-dot") return SceneKind::triple_dot;
  throw Error(Errc::invalid_parameter, "unknown scene kind '" + name + "'");
}

void SceneParams::validate() const {
  auto bad = [](const std::string& what) { throw Error(Errc::invalid_parameter, what); };
  if (!(line_spacing_px > 0.0) || !std::isfinite(line_spacing_px)) bad("line_spacing_px must be > 0");
  if (!(spacing_jitter_frac >= 0.0 && spacing_jitter_frac <= 0.3)) bad("spacing_jitter_frac must be in [0, 0.3]");
  if (!(slope_L < slope_C && slope_C < slope_R)) bad("slopes must satisfy slope_L < slope_C < slope_R");
  if (!std::isfinite(slope_L) || !std::isfinite(slope_R)) bad("slopes must be finite");
  if (!(center_band_halfwidth_px > 0.0)) bad("center_band_halfwidth_px must be > 0");
  if (extent_px < 1) bad("extent_px must be >= 1");
  if (!(first_line_frac > 0.0) || !(first_plane_frac > 0.0)) bad("first line/plane fractions must be > 0");
  if (!(plane_tilt >= 0.0 && plane_tilt <= 0.8)) bad("plane_tilt must be in [0, 0.8]");
}

int HyperplaneFamily::count(const Eigen::VectorXd& x) const {
  const double s = normal.dot(x);
  return static_cast<int>(std::upper_bound(offsets.begin(), offsets.end(), s) - offsets.begin());
}

Band::Region Band::region(const Eigen::VectorXd& x) const {
  const double s = normal.dot(x) - center;
  if (s < -halfwidth) return below;
  if (s < halfwidth) return inside;
  return above;
}

bool operator==(const HyperplaneFamily& a, const HyperplaneFamily& b) {
  return a.name == b.name && same_vector(a.normal, b.normal) && a.offsets == b.offsets;
}
bool operator==(const Halfspace& a, const Halfspace& b) {
  return same_vector(a.normal, b.normal) && a.offset == b.offset;
}
bool operator==(const Band& a, const Band& b) {
  return same_vector(a.normal, b.normal) && a.center == b.center && a.halfwidth == b.halfwidth;
}

std::vector<ClassLabel> double_dot_taxonomy() {
  return {{0, "ND"}, {1, "SD_L"}, {2, "SD_C"}, {3, "SD_R"}, {4, "DD"}};
}

std::vector<ClassLabel> triple_dot_taxonomy(TripleDotTaxonomy taxonomy) {
  if (taxonomy == TripleDotTaxonomy::collapsed) return {{0, "ND"}, {1, "SD"}, {2, "DD"}, {3, "TD"}};
  return {{0, "ND"},    {1, "SD_1"},  {2, "SD_2"},  {3, "DD_12"},
          {4, "SD_3"}, {5, "DD_13"}, {6, "DD_23"}, {7, "TD"}};
}

Scene::Scene(SceneKind kind, std::string id, Box extent, SceneParams params, std::uint64_t seed,
             std::vector<HyperplaneFamily> families, std::optional<Band> band,
             std::vector<Halfspace> polytope)
    : kind_(kind),
      id_(std::move(id)),
      extent_(std::move(extent)),
      params_(params),
      seed_(seed),
      families_(std::move(families)),
      band_(std::move(band)),
      polytope_(std::move(polytope)) {
  const int n = extent_.dims();
  if (n < 1 || extent_.hi.size() != n || !((extent_.hi.array() > extent_.lo.array()).all())) {
    throw Error(Errc::invalid_parameter, "scene extent is degenerate");
  }
  auto check_dims = [n](const Eigen::VectorXd& v) {
    if (v.size() != n) throw Error(Errc::shape_error, "scene element dimension does not match extent");
  };
  for (const auto& f : families_) {
    check_dims(f.normal);
    if (!std::is_sorted(f.offsets.begin(), f.offsets.end())) {
      throw Error(Errc::invalid_parameter, "family " + f.name + " offsets are not ascending");
    }
    if (f.offsets.size() >= static_cast<std::size_t>(kCountMask)) {
      throw Error(Errc::invalid_parameter, "family " + f.name + " has too many planes");
    }
  }
  for (const auto& h : polytope_) check_dims(h.normal);
  if (band_) check_dims(band_->normal);

  switch (kind_) {
    case SceneKind::polytope:
      if (!families_.empty() || band_) throw Error(Errc::invalid_parameter, "polytope scenes take only half-spaces");
      taxonomy_ = {{0, "outside"}, {1, "inside"}};
      break;
    case SceneKind::double_dot:
      if (n != 2 || families_.size() != 3 || !band_) {
        throw Error(Errc::invalid_parameter, "double-dot scenes need N = 2, families {L, R, C} and a band");
      }
      taxonomy_ = double_dot_taxonomy();
      break;
    case SceneKind::triple_dot:
      if (families_.size() != 3 || band_) {
        throw Error(Errc::invalid_parameter, "triple-dot scenes need three families and no band");
      }
      taxonomy_ = triple_dot_taxonomy(params_.taxonomy_3d);
      break;
  }
  build_boundaries();
}

CellId Scene::cell_id(const Eigen::VectorXd& x) const {
  switch (kind_) {
    case SceneKind::polytope: {
      for (const auto& h : polytope_) {
        if (!(h.normal.dot(x) < h.offset)) return 0;
      }
      return 1;
    }
    case SceneKind::double_dot: {
      const auto region = band_->region(x);
      if (region == Band::inside) return pack_cell(region, families_[2].count(x), 0, 0);
      return pack_cell(region, families_[0].count(x), families_[1].count(x), 0);
    }
    case SceneKind::triple_dot:
      return pack_cell(0, families_[0].count(x), families_[1].count(x), families_[2].count(x));
  }
  return 0;
}

const ClassLabel& Scene::class_of(CellId cell) const {
  switch (kind_) {
    case SceneKind::polytope:
      return taxonomy_.at(cell == 1 ? 1 : 0);
    case SceneKind::double_dot: {
      const int region = cell_region(cell);
      if (region == Band::inside) return taxonomy_[cell_count(cell, 0) > 0 ? 2 : 0];
      const bool left = cell_count(cell, 0) > 0;
      const bool right = cell_count(cell, 1) > 0;
      if (left && right) return taxonomy_[4];
      if (left) return taxonomy_[1];
      if (right) return taxonomy_[3];
      return taxonomy_[0];
    }
    case SceneKind::triple_dot: {
      int mask = 0;
      int occupied = 0;
      for (int i = 0; i < 3; ++i) {
        if (cell_count(cell, i) > 0) {
          mask |= 1 << i;
          ++occupied;
        }
      }
      return taxonomy_[params_.taxonomy_3d == TripleDotTaxonomy::collapsed ? occupied : mask];
    }
  }
  return taxonomy_.front();
}

void Scene::check_point(const Eigen::VectorXd& x) const {
  if (x.size() != dims()) throw Error(Errc::shape_error, "point dimension does not match scene");
  if (!extent_.contains(x)) throw Error(Errc::out_of_bounds, "point lies outside the scene extent");
}

LabelAt Scene::label_at(const Eigen::VectorXd& x) const {
  check_point(x);
  const CellId c = cell_id(x);
  return {c, class_of(c)};
}

void Scene::build_boundaries() {
  boundaries_.clear();
  switch (kind_) {
    case SceneKind::polytope:
      for (std::size_t i = 0; i < polytope_.size(); ++i) {
        BoundaryPiece piece{polytope_[i].normal, polytope_[i].offset, {}};
        for (std::size_t j = 0; j < polytope_.size(); ++j) {
          if (j != i) piece.constraints.emplace_back(polytope_[j].normal, polytope_[j].offset);
        }
        boundaries_.push_back(std::move(piece));
      }
      break;
    case SceneKind::double_dot: {
      const Band& b = *band_;
      const std::pair<Eigen::VectorXd, double> below{b.normal, b.center - b.halfwidth};
      const std::pair<Eigen::VectorXd, double> above{-b.normal, -(b.center + b.halfwidth)};
      const std::pair<Eigen::VectorXd, double> under_top{b.normal, b.center + b.halfwidth};
      const std::pair<Eigen::VectorXd, double> over_bottom{-b.normal, -(b.center - b.halfwidth)};
      for (int f = 0; f < 2; ++f) {
        for (double o : families_[f].offsets) {
          boundaries_.push_back({families_[f].normal, o, {below}});
          boundaries_.push_back({families_[f].normal, o, {above}});
        }
      }
      for (double o : families_[2].offsets) {
        boundaries_.push_back({families_[2].normal, o, {under_top, over_bottom}});
      }
      boundaries_.push_back({b.normal, b.center - b.halfwidth, {}});
      boundaries_.push_back({b.normal, b.center + b.halfwidth, {}});
      break;
    }
    case SceneKind::triple_dot:
      for (const auto& fam : families_) {
        for (double o : fam.offsets) boundaries_.push_back({fam.normal, o, {}});
      }
      break;
  }
}

double Scene::piece_distance(const BoundaryPiece& piece, const Eigen::VectorXd& x) {
  const double signed_gap = piece.normal.dot(x) - piece.offset;
  if (piece.constraints.empty()) return std::abs(signed_gap);
  if (x.size() != 2) {
    throw Error(Errc::unsupported_scheme, "clipped boundary distance is only available in 2D");
  }
  // Parametrize the line as base + t * along, then clip t by the constraints.
  const Eigen::Vector2d n = piece.normal;
  const Eigen::Vector2d base = piece.offset * n;
  const Eigen::Vector2d along(-n[1], n[0]);
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : piece.constraints) {
    const double slope = a.dot(along);
    const double room = b - a.dot(base);
    if (std::abs(slope) < 1e-15) {
      if (room < 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    if (slope > 0.0) {
      hi = std::min(hi, room / slope);
    } else {
      lo = std::max(lo, room / slope);
    }
  }
  if (lo > hi) return std::numeric_limits<double>::infinity();
  const double t = std::clamp(along.dot(x - base), lo, hi);
  return (x - (base + t * along)).norm();
}

double Scene::boundary_distance(const Eigen::VectorXd& x) const {
  check_point(x);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& piece : boundaries_) best = std::min(best, piece_distance(piece, x));
  return best;
}

Scene Scene::transformed(const Eigen::MatrixXd& rotation, const Eigen::VectorXd& translation) const {
  const int n = dims();
  if (rotation.rows() != n || rotation.cols() != n || translation.size() != n) {
    throw Error(Errc::shape_error, "transform dimension does not match scene");
  }
  if (!(rotation.transpose() * rotation).isIdentity(1e-12)) {
    throw Error(Errc::invalid_parameter, "rotation must be orthogonal");
  }
  auto move_normal = [&](const Eigen::VectorXd& normal, double offset) {
    Eigen::VectorXd moved = rotation * normal;
    return std::pair<Eigen::VectorXd, double>{moved, offset + moved.dot(translation)};
  };

  std::vector<HyperplaneFamily> families = families_;
  for (auto& f : families) {
    Eigen::VectorXd moved = rotation * f.normal;
    const double shift = moved.dot(translation);
    for (double& o : f.offsets) o += shift;
    f.normal = std::move(moved);
  }
  std::optional<Band> band = band_;
  if (band) {
    auto [normal, center] = move_normal(band->normal, band->center);
    band->normal = normal;
    band->center = center;
  }
  std::vector<Halfspace> polytope = polytope_;
  for (auto& h : polytope) {
    auto [normal, offset] = move_normal(h.normal, h.offset);
    h.normal = normal;
    h.offset = offset;
  }

  Box box{Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity()),
          Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity())};
  for (long corner = 0; corner < (1L << n); ++corner) {
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) c[i] = (corner >> i) & 1 ? extent_.hi[i] : extent_.lo[i];
    const Eigen::VectorXd moved = rotation * c + translation;
    box.lo = box.lo.cwiseMin(moved);
    box.hi = box.hi.cwiseMax(moved);
  }
  return Scene(kind_, id_, std::move(box), params_, seed_, std::move(families), std::move(band),
               std::move(polytope));
}

bool operator==(const Scene& a, const Scene& b) {
  return a.kind_ == b.kind_ && a.id_ == b.id_ && same_box(a.extent_, b.extent_) && a.params_ == b.params_ &&
         a.seed_ == b.seed_ && a.families_ == b.families_ && a.band_ == b.band_ && a.polytope_ == b.polytope_;
}

Scene gen_double_dot_2d(const SceneParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  const double extent = params.extent_px;
  const Box box{Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(extent, extent)};

  auto jitter = [&](double value, double frac) { return value * (1.0 + frac * rng.uniform(-1.0, 1.0)); };
  double slope_l = jitter(params.slope_L, 0.05);
  double slope_c = jitter(params.slope_C, 0.05);
  double slope_r = jitter(params.slope_R, 0.05);
  if (!(slope_l < slope_c && slope_c < slope_r)) {
    slope_l = params.slope_L;
    slope_c = params.slope_C;
    slope_r = params.slope_R;
  }
  const double reach = jitter(params.first_line_frac, params.spacing_jitter_frac) * extent;

  const Eigen::Vector2d n_l = line_normal(slope_l);
  const Eigen::Vector2d n_r = line_normal(slope_r);
  const Eigen::Vector2d n_c = line_normal(slope_c);

  // First L line crosses the y axis at `reach`, first R line the x axis.
  const double first_l = n_l.dot(Eigen::Vector2d(0.0, reach));
  const double first_r = n_r.dot(Eigen::Vector2d(reach, 0.0));

  // The band follows the diagonal through the corner where both first lines meet.
  Eigen::Matrix2d lines;
  lines << n_l.transpose(), n_r.transpose();
  const Eigen::Vector2d apex = lines.colPivHouseholderQr().solve(Eigen::Vector2d(first_l, first_r));
  const Eigen::Vector2d n_band = Eigen::Vector2d(-1.0, 1.0).normalized();
  Band band{n_band, n_band.dot(apex), params.center_band_halfwidth_px};

  std::vector<HyperplaneFamily> families;
  families.push_back({"L", n_l, jittered_offsets(first_l, max_projection(box, n_l), params, rng)});
  families.push_back({"R", n_r, jittered_offsets(first_r, max_projection(box, n_r), params, rng)});
  families.push_back({"C", n_c, jittered_offsets(n_c.dot(apex), max_projection(box, n_c), params, rng)});

  return Scene(SceneKind::double_dot, "double-dot-" + std::to_string(seed), box, params, seed,
               std::move(families), band, {});
}

Scene gen_triple_dot_3d(const SceneParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  const double extent = params.extent_px;
  const Box box{Eigen::Vector3d::Zero(), Eigen::Vector3d::Constant(extent)};

  std::vector<HyperplaneFamily> families;
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    // cyclic tilt: the next axis leans in, the previous one leans out
    for (int j = 0; j < 3; ++j) {
      if (j == i) {
        v[j] = 1.0;
        continue;
      }
      const double sign = j == (i + 1) % 3 ? 1.0 : -1.0;
      v[j] = sign * params.plane_tilt * (1.0 + 0.2 * rng.uniform(-1.0, 1.0));
    }
    const Eigen::VectorXd normal = v.normalized();
    const double first = params.first_plane_frac * extent * normal.sum() *
                         (1.0 + params.spacing_jitter_frac * rng.uniform(-1.0, 1.0));
    families.push_back({"D" + std::to_string(i + 1), normal,
                        jittered_offsets(first, max_projection(box, normal), params, rng)});
  }
  return Scene(SceneKind::triple_dot, "triple-dot-" + std::to_string(seed), box, params, seed,
               std::move(families), std::nullopt, {});
}

Scene square_scene(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw Error(Errc::invalid_parameter, "square half-diagonal must be > 0");
  const double h = 4.0 * a;
  const Box box{Eigen::Vector2d(-h, -h), Eigen::Vector2d(h, h)};
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  std::vector<Halfspace> sides;
  for (double sx : {1.0, -1.0}) {
    for (double sy : {1.0, -1.0}) {
      sides.push_back({Eigen::Vector2d(sx * inv_sqrt2, sy * inv_sqrt2), a * inv_sqrt2});
    }
  }
  std::string id = "square-" + std::to_string(a);
  return polytope_scene(box, std::move(sides), std::move(id));
}

Scene polytope_scene(const Box& extent, std::vector<Halfspace> halfspaces, std::string id) {
  return Scene(SceneKind::polytope, std::move(id), extent, SceneParams{}, 0, {}, std::nullopt,
               std::move(halfspaces));
}

Scene single_cell_scene(const Box& extent) { return polytope_scene(extent, {}, "single-cell"); }

}  // namespace rayfp
