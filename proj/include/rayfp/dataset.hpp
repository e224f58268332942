#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rayfp/fingerprint.hpp"
#include "rayfp/geometry.hpp"
#include "rayfp/nn.hpp"
#include "rayfp/scene.hpp"

namespace rayfp {

struct FingerprintRecord {
  std::string scene_id;
  Point center;
  int m = 0;
  int r = 0;
  Eigen::VectorXd fingerprint;
  int label = 0;
  bool truncated = false;

  friend bool operator==(const FingerprintRecord& a, const FingerprintRecord& b);
};

struct DatasetMeta {
  int dims = 0;
  int m = 0;
  int r = 0;
  std::string gamma = "reciprocal";
  std::string direction_scheme;
  double offset_angle = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> class_names;

  friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

/// Fingerprint rows sharing M, r, dimension and class taxonomy.
struct Dataset {
  DatasetMeta meta;
  std::vector<FingerprintRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
  int class_count() const noexcept { return static_cast<int>(meta.class_names.size()); }

  /// Throws schema_error when a record disagrees with the metadata.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

/// per_axis^N lattice points spanning the box (corners included), in
/// row-major order: the first coordinate varies slowest.
std::vector<Point> grid_points(const Box& extent, int per_axis);

/// One record per (scene, grid point) in scene order, then grid order.
Dataset build_dataset(const std::vector<Scene>& scenes, const DirectionSet& dirs, int r,
                      const WeightFunction& gamma, int per_axis);

/// Seeded shuffle; the first floor(fraction * n) records go to training.
std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec);

/// Fingerprints as columns, for the classifier.
LabeledData<double> to_labeled(const Dataset& dataset);

enum class DatasetFormat { jsonl, csv };

/// .csv selects CSV, anything else JSONL.
DatasetFormat format_for_path(const std::string& path);

std::string dataset_to_string(const Dataset& dataset, DatasetFormat format);
Dataset dataset_from_string(const std::string& text, DatasetFormat format);
void write_dataset(const std::string& path, const Dataset& dataset, DatasetFormat format);
Dataset read_dataset(const std::string& path, DatasetFormat format);

}  // namespace rayfp
