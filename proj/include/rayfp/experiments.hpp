#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rayfp/dataset.hpp"
#include "rayfp/fingerprint.hpp"
#include "rayfp/nn.hpp"
#include "rayfp/scene.hpp"

namespace rayfp {

/// Image-based CNN benchmark accuracy on the 2D task; a plot reference only.
inline constexpr double kCnnReference2d = 0.959;

/// Everything a trial needs besides (M, r, run index).
struct TrialSetup {
  int dims = 2;
  std::vector<int> arch{256, 128, 32};
  std::uint64_t master_seed = 0;
  int grid_per_axis = 37;
  std::string gamma = "reciprocal";
  double offset_angle = 0.0;
  double train_fraction = 0.8;
  int epochs = 50;
  int batch_size = 32;
  double learning_rate = 1e-3;
};

struct SweepSpec {
  std::vector<int> ray_counts;
  std::vector<int> ray_lengths_px;
  int runs_per_cell = 50;
  int scene_count = 20;
  SceneParams scene_params;
  TrialSetup setup;

  void validate() const;

  /// M in {3,4,5,6,12} x r in {10,...,80}, 50 runs, 20 scenes on a 37x37 grid.
  static SweepSpec double_dot_defaults();
  /// M in {6,...,18} at r = 60, 10 runs, one scene on a 26^3 grid.
  static SweepSpec triple_dot_defaults();
};

struct RunResult {
  int m = 0;
  int r = 0;
  std::uint64_t pixel_budget = 0;
  double mu = 0.0;
  double sigma = 0.0;
  int n_runs = 0;
  std::vector<double> accuracies;
};

struct TrialSeeds {
  std::uint64_t split;
  std::uint64_t init;
  std::uint64_t shuffle;
};

/// Seeds for one trial, a hash of (master seed, M, r, run index).
TrialSeeds trial_seeds(std::uint64_t master_seed, int m, int r, int run_index);

/// Mean and sample standard deviation (0 for a single value).
std::pair<double, double> mean_and_std(const std::vector<double>& values);

/// Training scenes: seeds derived from the master seed.
std::vector<Scene> make_scenes(int dims, int count, const SceneParams& params, std::uint64_t master_seed);
/// Held-out scenes; their seeds never coincide with make_scenes' for the
/// same master seed.
std::vector<Scene> make_test_scenes(int dims, int count, const SceneParams& params, std::uint64_t master_seed);

DirectionSet trial_directions(const TrialSetup& setup, int m);

/// Splits, trains and returns validation accuracy for one run on a
/// prebuilt dataset.
double run_trial(const Dataset& data, int run_index, const TrialSetup& setup);

/// Builds the (M, r) dataset from the scenes, then runs one trial.
double run_trial(const std::vector<Scene>& scenes, int m, int r, int run_index, const TrialSetup& setup);

/// One RunResult per (M, r) cell, ordered by M then r.
std::vector<RunResult> run_sweep(const SweepSpec& spec, const std::vector<Scene>& scenes);
std::vector<RunResult> sweep_2d(const SweepSpec& spec);
std::vector<RunResult> sweep_3d(const SweepSpec& spec);

struct CurveReferences {
  double cnn_2d = kCnnReference2d;
  // Minimum-data markers for the 3D CNN comparisons, in voxels.
  double slices_3d = 3 * 30 * 30;
  double scan_2d = 60 * 60;
  double full_3d = 30 * 30 * 30;
};

/// Plot-ready CSV: M, r, pixel_budget, mu, sigma, lo3, hi3, n_runs and the
/// constant reference columns.
std::string curves_csv(const std::vector<RunResult>& results, const CurveReferences& refs = {});
void emit_curves(const std::vector<RunResult>& results, const std::string& path, const CurveReferences& refs = {});

/// Published reference accuracies for a cell, NaN where none exists.
double paper_reference(int dims, const std::vector<int>& arch, int m, int r);

struct ArchSweepSpec {
  std::vector<std::vector<int>> archs{{64, 32}, {128, 64, 32}, {256, 64, 32}, {512, 256, 64, 32}};
  std::vector<std::pair<int, int>> cells{{5, 50}, {5, 60}, {6, 50}, {6, 60}};
  int runs_per_cell = 50;
  int scene_count = 20;
  SceneParams scene_params;
  TrialSetup setup;
};

struct ArchCell {
  std::vector<int> arch;
  int m = 0;
  int r = 0;
  double mu = 0.0;
  double sigma = 0.0;
  int n_runs = 0;
  std::vector<double> accuracies;
};

std::vector<ArchCell> arch_sweep(const ArchSweepSpec& spec, const std::vector<Scene>& scenes);
std::vector<ArchCell> arch_sweep(const ArchSweepSpec& spec);
/// One row per architecture, a mu/sigma column pair per cell.
std::string arch_table_csv(const ArchSweepSpec& spec, const std::vector<ArchCell>& cells);

struct FailureRow {
  std::string scene_id;
  Point x;
  int true_label = 0;
  int predicted = 0;
  bool correct = false;
  double boundary_distance = 0.0;
};

std::vector<FailureRow> failure_map(const MlpParams<double>& params, const std::vector<Scene>& scenes,
                                    const DirectionSet& dirs, int r, const WeightFunction& gamma, int per_axis);
std::string failure_map_csv(const std::vector<FailureRow>& rows);

struct ClassMeans {
  std::vector<std::string> class_names;
  std::vector<std::size_t> counts;  // records per class
  Eigen::MatrixXd means;            // class x M; rows of absent classes are NaN
};

ClassMeans class_mean_fingerprints(const Dataset& dataset);
std::string class_means_csv(const ClassMeans& means);

/// c[s] = sum_k a[k] * b[(k + s) mod M].
Eigen::VectorXd circular_cross_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Offset of the maximum of circular_cross_correlation; ties to the smallest.
int best_circular_offset(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Median of a non-empty list.
double median(std::vector<double> values);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace rayfp
