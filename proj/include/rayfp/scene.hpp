#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rayfp/geometry.hpp"

namespace rayfp {

struct ClassLabel {
  int id = 0;
  std::string name;

  friend bool operator==(const ClassLabel&, const ClassLabel&) = default;
};

enum class SceneKind { polytope, double_dot, triple_dot };
enum class TripleDotTaxonomy { collapsed, resolved };

std::string to_string(SceneKind kind);
SceneKind scene_kind_from_string(const std::string& name);

/// Generator knobs for the stylized charge-stability scenes. Lengths in px.
struct SceneParams {
  double line_spacing_px = 30.0;
  double spacing_jitter_frac = 0.1;
  double slope_L = -2.0;
  double slope_C = -1.0;
  double slope_R = -0.5;
  double center_band_halfwidth_px = 20.0;
  int extent_px = 300;
  // Where the first transition line of each 2D family crosses its far axis,
  // as a fraction of the extent.
  double first_line_frac = 0.9;
  // 3D: offset of the first plane of each family, as a fraction of the extent,
  // and the off-axis weight of the plane normals.
  double first_plane_frac = 0.35;
  double plane_tilt = 0.35;
  TripleDotTaxonomy taxonomy_3d = TripleDotTaxonomy::collapsed;

  void validate() const;

  friend bool operator==(const SceneParams&, const SceneParams&) = default;
};

/// Parallel hyperplanes {x : normal . x = offset_k}, offsets ascending.
/// count(x) is the number of planes at or below x, so a point lying on a
/// plane belongs to the cell on its upper side.
struct HyperplaneFamily {
  std::string name;
  Eigen::VectorXd normal;
  std::vector<double> offsets;

  int count(const Eigen::VectorXd& x) const;

  friend bool operator==(const HyperplaneFamily& a, const HyperplaneFamily& b);
};

/// Open half-space {x : normal . x < offset}.
struct Halfspace {
  Eigen::VectorXd normal;
  double offset = 0.0;

  friend bool operator==(const Halfspace& a, const Halfspace& b);
};

/// Slab |normal . x - center| < halfwidth, half-open like the line families.
struct Band {
  Eigen::VectorXd normal;
  double center = 0.0;
  double halfwidth = 0.0;

  enum Region : int { below = 0, inside = 1, above = 2 };
  Region region(const Eigen::VectorXd& x) const;

  friend bool operator==(const Band& a, const Band& b);
};

using CellId = std::int64_t;

struct LabelAt {
  CellId cell_id;
  ClassLabel label;
};

/// Labeled partition of a box in R^N into convex cells. Immutable.
///
/// - polytope: cell 1 is the intersection of the half-spaces, cell 0 the rest.
///   With no half-spaces the whole box is a single cell.
/// - double_dot: families {L, R} outside a diagonal band, family C inside it.
/// - triple_dot: three plane families, cell = occupation triple.
class Scene {
 public:
  Scene(SceneKind kind, std::string id, Box extent, SceneParams params, std::uint64_t seed,
        std::vector<HyperplaneFamily> families, std::optional<Band> band,
        std::vector<Halfspace> polytope);

  SceneKind kind() const noexcept { return kind_; }
  const std::string& id() const noexcept { return id_; }
  int dims() const noexcept { return extent_.dims(); }
  const Box& extent() const noexcept { return extent_; }
  const SceneParams& params() const noexcept { return params_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<HyperplaneFamily>& families() const noexcept { return families_; }
  const std::optional<Band>& band() const noexcept { return band_; }
  const std::vector<Halfspace>& polytope() const noexcept { return polytope_; }
  const std::vector<ClassLabel>& taxonomy() const noexcept { return taxonomy_; }
  int class_count() const noexcept { return static_cast<int>(taxonomy_.size()); }

  bool contains(const Eigen::VectorXd& x) const { return extent_.contains(x); }

  /// Cell containing x; no extent check.
  CellId cell_id(const Eigen::VectorXd& x) const;
  const ClassLabel& class_of(CellId cell) const;

  /// Throws out_of_bounds when x is outside the extent.
  LabelAt label_at(const Eigen::VectorXd& x) const;

  /// Euclidean distance from x to the nearest cell boundary. Boundaries are
  /// not clipped to the extent. Infinite for single-cell scenes.
  double boundary_distance(const Eigen::VectorXd& x) const;

  /// The same partition under x -> rotation * x + translation. The extent
  /// becomes the bounding box of the moved one.
  Scene transformed(const Eigen::MatrixXd& rotation, const Eigen::VectorXd& translation) const;

  friend bool operator==(const Scene& a, const Scene& b);

 private:
  struct BoundaryPiece {
    Eigen::VectorXd normal;
    double offset;
    // a . x <= b
    std::vector<std::pair<Eigen::VectorXd, double>> constraints;
  };

  void check_point(const Eigen::VectorXd& x) const;
  void build_boundaries();
  static double piece_distance(const BoundaryPiece& piece, const Eigen::VectorXd& x);

  SceneKind kind_;
  std::string id_;
  Box extent_;
  SceneParams params_;
  std::uint64_t seed_;
  std::vector<HyperplaneFamily> families_;
  std::optional<Band> band_;
  std::vector<Halfspace> polytope_;
  std::vector<ClassLabel> taxonomy_;
  std::vector<BoundaryPiece> boundaries_;
};

std::vector<ClassLabel> double_dot_taxonomy();
std::vector<ClassLabel> triple_dot_taxonomy(TripleDotTaxonomy taxonomy);

Scene gen_double_dot_2d(const SceneParams& params, std::uint64_t seed);
Scene gen_triple_dot_3d(const SceneParams& params, std::uint64_t seed);

/// Two cells: inside {|x1| + |x2| < a} and outside, on the box [-4a, 4a]^2.
Scene square_scene(double a);

/// Arbitrary convex polytope (intersection of open half-spaces) in a box.
Scene polytope_scene(const Box& extent, std::vector<Halfspace> halfspaces, std::string id = "polytope");

/// A box with no boundaries at all.
Scene single_cell_scene(const Box& extent);

// JSON documents: {"scenes": [ ... ]}. Doubles round-trip exactly.
std::string scenes_to_json(const std::vector<Scene>& scenes);
std::vector<Scene> scenes_from_json(const std::string& text);
void write_scenes(const std::string& path, const std::vector<Scene>& scenes);
std::vector<Scene> read_scenes(const std::string& path);

}  // namespace rayfp
