#include "rayfp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "rayfp/format.hpp"
#include "rayfp/random.hpp"

namespace rayfp {

namespace {

constexpr std::uint64_t kTrainSceneSalt = 0x7261696e;  // "rain"
constexpr std::uint64_t kTestSceneSalt = 0x74657374;   // "test"

std::uint64_t as_seed(int v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); }

std::vector<Scene> scenes_with_salt(int dims, int count, const SceneParams& params, std::uint64_t master_seed,
                                    std::uint64_t salt) {
  if (count < 1) throw Error(Errc::invalid_count, "scene count must be >= 1");
  std::vector<Scene> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = derive_seed({master_seed, salt, as_seed(i)});
    if (dims == 2) {
      out.push_back(gen_double_dot_2d(params, seed));
    } else if (dims == 3) {
      out.push_back(gen_triple_dot_3d(params, seed));
    } else {
      throw Error(Errc::invalid_parameter, "scenes exist only for N = 2 or 3");
    }
  }
  return out;
}

std::string cell_key(int m, int r) { return std::to_string(m) + "x" + std::to_string(r); }

}  // namespace

void SweepSpec::validate() const {
  if (ray_counts.empty() || ray_lengths_px.empty()) throw Error(Errc::invalid_parameter, "sweep needs ray counts and lengths");
  if (runs_per_cell < 1) throw Error(Errc::invalid_count, "runs per cell must be >= 1");
  if (setup.dims != 2 && setup.dims != 3) throw Error(Errc::invalid_parameter, "sweep dimension must be 2 or 3");
  for (int m : ray_counts) {
    if (m < 1) throw Error(Errc::invalid_count, "ray counts must be >= 1");
  }
  for (int r : ray_lengths_px) {
    if (r < 1) throw Error(Errc::invalid_length, "ray lengths must be >= 1");
  }
}

SweepSpec SweepSpec::double_dot_defaults() {
  SweepSpec s;
  s.ray_counts = {3, 4, 5, 6, 12};
  for (int r = 10; r <= 80; r += 10) s.ray_lengths_px.push_back(r);
  s.runs_per_cell = 50;
  s.scene_count = 20;
  s.setup.dims = 2;
  s.setup.grid_per_axis = 37;
  return s;
}

SweepSpec SweepSpec::triple_dot_defaults() {
  SweepSpec s;
  for (int m = 6; m <= 18; ++m) s.ray_counts.push_back(m);
  s.ray_lengths_px = {60};
  s.runs_per_cell = 10;
  s.scene_count = 1;
  s.setup.dims = 3;
  s.setup.grid_per_axis = 26;
  return s;
}

TrialSeeds trial_seeds(std::uint64_t master_seed, int m, int r, int run_index) {
  const std::uint64_t base = derive_seed({master_seed, as_seed(m), as_seed(r), as_seed(run_index)});
  return {derive_seed({base, 1}), derive_seed({base, 2}), derive_seed({base, 3})};
}

std::pair<double, double> mean_and_std(const std::vector<double>& values) {
  if (values.empty()) throw Error(Errc::empty_dataset, "no values to summarize");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::vector<Scene> make_scenes(int dims, int count, const SceneParams& params, std::uint64_t master_seed) {
  return scenes_with_salt(dims, count, params, master_seed, kTrainSceneSalt);
}

std::vector<Scene> make_test_scenes(int dims, int count, const SceneParams& params, std::uint64_t master_seed) {
  return scenes_with_salt(dims, count, params, master_seed, kTestSceneSalt);
}

DirectionSet trial_directions(const TrialSetup& setup, int m) {
  return default_directions(setup.dims, m, setup.offset_angle);
}

double run_trial(const Dataset& data, int run_index, const TrialSetup& setup) {
  const TrialSeeds seeds = trial_seeds(setup.master_seed, data.meta.m, data.meta.r, run_index);
  const auto [train_part, val_part] = split(data, SplitSpec{setup.train_fraction, seeds.split});
  MlpSpec spec{data.meta.m, setup.arch, data.class_count()};
  TrainConfig config{setup.epochs, setup.batch_size, seeds.shuffle, setup.learning_rate};
  const auto train_set = to_labeled(train_part);
  const auto val_set = to_labeled(val_part);
  const auto trained = train<double>(spec, train_set, std::nullopt, config, seeds.init);
  return evaluate(trained.params, val_set).accuracy;
}

double run_trial(const std::vector<Scene>& scenes, int m, int r, int run_index, const TrialSetup& setup) {
  const Dataset data = build_dataset(scenes, trial_directions(setup, m), r, WeightFunction::parse(setup.gamma),
                                     setup.grid_per_axis);
  return run_trial(data, run_index, setup);
}

std::vector<RunResult> run_sweep(const SweepSpec& spec, const std::vector<Scene>& scenes) {
  spec.validate();
  const WeightFunction gamma = WeightFunction::parse(spec.setup.gamma);
  std::vector<RunResult> out;
  for (int m : spec.ray_counts) {
    const DirectionSet dirs = trial_directions(spec.setup, m);
    for (int r : spec.ray_lengths_px) {
      const Dataset data = build_dataset(scenes, dirs, r, gamma, spec.setup.grid_per_axis);
      RunResult res;
      res.m = m;
      res.r = r;
      res.pixel_budget = pixel_budget(static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(r));
      for (int run = 0; run < spec.runs_per_cell; ++run) res.accuracies.push_back(run_trial(data, run, spec.setup));
      std::tie(res.mu, res.sigma) = mean_and_std(res.accuracies);
      res.n_runs = static_cast<int>(res.accuracies.size());
      out.push_back(std::move(res));
    }
  }
  return out;
}

std::vector<RunResult> sweep_2d(const SweepSpec& spec) {
  if (spec.setup.dims != 2) throw Error(Errc::invalid_parameter, "sweep_2d needs dims = 2");
  return run_sweep(spec, make_scenes(2, spec.scene_count, spec.scene_params, spec.setup.master_seed));
}

std::vector<RunResult> sweep_3d(const SweepSpec& spec) {
  if (spec.setup.dims != 3) throw Error(Errc::invalid_parameter, "sweep_3d needs dims = 3");
  return run_sweep(spec, make_scenes(3, spec.scene_count, spec.scene_params, spec.setup.master_seed));
}

double paper_reference(int dims, const std::vector<int>& arch, int m, int r) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (dims == 3) {
    if (r != 60) return nan;
    if (m == 6) return 0.662;
    if (m == 18) return 0.799;
    return nan;
  }
  static const std::map<std::string, std::map<std::string, double>> table{
      {"64-32", {{"5x50", 0.936}, {"5x60", 0.958}, {"6x50", 0.945}, {"6x60", 0.963}}},
      {"128-64-32", {{"5x50", 0.942}, {"5x60", 0.964}, {"6x50", 0.946}, {"6x60", 0.964}}},
      {"256-64-32", {{"5x50", 0.942}, {"5x60", 0.965}, {"6x50", 0.947}, {"6x60", 0.966}}},
      {"512-256-64-32", {{"5x50", 0.946}, {"5x60", 0.965}, {"6x50", 0.945}, {"6x60", 0.963}}},
  };
  const auto row = table.find(format_arch(arch));
  if (row != table.end()) {
    const auto cell = row->second.find(cell_key(m, r));
    if (cell != row->second.end()) return cell->second;
  }
  if (format_arch(arch) == "256-128-32" && m == 6 && r == 60) return 0.964;
  return nan;
}

std::string curves_csv(const std::vector<RunResult>& results, const CurveReferences& refs) {
  std::string out = "M,r,pixel_budget,mu,sigma,lo3,hi3,n_runs,cnn_ref_2d,marker_slices_3d,marker_scan_2d,marker_full_3d\n";
  for (const auto& res : results) {
    out += std::to_string(res.m) + "," + std::to_string(res.r) + "," + std::to_string(res.pixel_budget) + "," +
           format_double(res.mu) + "," + format_double(res.sigma) + "," + format_double(res.mu - 3.0 * res.sigma) +
           "," + format_double(res.mu + 3.0 * res.sigma) + "," + std::to_string(res.n_runs) + "," +
           format_double(refs.cnn_2d) + "," + format_double(refs.slices_3d) + "," + format_double(refs.scan_2d) +
           "," + format_double(refs.full_3d) + "\n";
  }
  return out;
}

void emit_curves(const std::vector<RunResult>& results, const std::string& path, const CurveReferences& refs) {
  if (results.empty()) throw Error(Errc::empty_dataset, "no results to emit");
  write_text(path, curves_csv(results, refs));
}

std::vector<ArchCell> arch_sweep(const ArchSweepSpec& spec, const std::vector<Scene>& scenes) {
  if (spec.archs.empty() || spec.cells.empty()) throw Error(Errc::invalid_parameter, "arch sweep needs archs and cells");
  if (spec.runs_per_cell < 1) throw Error(Errc::invalid_count, "runs per cell must be >= 1");
  const WeightFunction gamma = WeightFunction::parse(spec.setup.gamma);
  std::vector<ArchCell> out;
  // Datasets depend only on the cell; every architecture sees the same splits.
  for (const auto& [m, r] : spec.cells) {
    const Dataset data = build_dataset(scenes, trial_directions(spec.setup, m), r, gamma, spec.setup.grid_per_axis);
    for (const auto& arch : spec.archs) {
      TrialSetup setup = spec.setup;
      setup.arch = arch;
      ArchCell cell{arch, m, r, 0.0, 0.0, 0, {}};
      for (int run = 0; run < spec.runs_per_cell; ++run) cell.accuracies.push_back(run_trial(data, run, setup));
      std::tie(cell.mu, cell.sigma) = mean_and_std(cell.accuracies);
      cell.n_runs = static_cast<int>(cell.accuracies.size());
      out.push_back(std::move(cell));
    }
  }
  return out;
}

std::vector<ArchCell> arch_sweep(const ArchSweepSpec& spec) {
  return arch_sweep(spec, make_scenes(spec.setup.dims, spec.scene_count, spec.scene_params, spec.setup.master_seed));
}

std::string arch_table_csv(const ArchSweepSpec& spec, const std::vector<ArchCell>& cells) {
  std::string out = "dnn";
  for (const auto& [m, r] : spec.cells) {
    const std::string key = cell_key(m, r);
    out += ",mu_" + key + ",sigma_" + key + ",n_" + key + ",paper_mu_" + key;
  }
  out += "\n";
  for (const auto& arch : spec.archs) {
    out += format_arch(arch);
    for (const auto& [m, r] : spec.cells) {
      const auto it = std::find_if(cells.begin(), cells.end(), [&, m = m, r = r](const ArchCell& c) {
        return c.arch == arch && c.m == m && c.r == r;
      });
      if (it == cells.end()) throw Error(Errc::schema_error, "missing result for " + format_arch(arch) + " @ " + cell_key(m, r));
      out += "," + format_double(it->mu) + "," + format_double(it->sigma) + "," + std::to_string(it->n_runs) + "," +
             format_double(paper_reference(spec.setup.dims, arch, m, r));
    }
    out += "\n";
  }
  return out;
}

std::vector<FailureRow> failure_map(const MlpParams<double>& params, const std::vector<Scene>& scenes,
                                    const DirectionSet& dirs, int r, const WeightFunction& gamma, int per_axis) {
  if (params.spec.input_dim != dirs.count()) {
    throw Error(Errc::shape_error, "model expects M = " + std::to_string(params.spec.input_dim) + ", directions give " +
                                       std::to_string(dirs.count()));
  }
  std::vector<FailureRow> rows;
  for (const auto& scene : scenes) {
    if (scene.class_count() != params.spec.output_dim) {
      throw Error(Errc::shape_error, "scene " + scene.id() + " taxonomy does not match the model outputs");
    }
    const Dataset data = build_dataset({scene}, dirs, r, gamma, per_axis);
    const auto predicted = predict(params, to_labeled(data).inputs);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& rec = data.records[i];
      rows.push_back({scene.id(), rec.center, rec.label, predicted[i], rec.label == predicted[i],
                      scene.boundary_distance(rec.center)});
    }
  }
  return rows;
}

std::string failure_map_csv(const std::vector<FailureRow>& rows) {
  const int dims = rows.empty() ? 2 : static_cast<int>(rows.front().x.size());
  std::string out = "scene_id";
  for (int i = 1; i <= dims; ++i) out += ",x_" + std::to_string(i);
  out += ",true_label,predicted,correct,boundary_distance\n";
  for (const auto& row : rows) {
    out += row.scene_id;
    for (Eigen::Index i = 0; i < row.x.size(); ++i) out += "," + format_double(row.x[i]);
    out += "," + std::to_string(row.true_label) + "," + std::to_string(row.predicted) + "," +
           (row.correct ? "1" : "0") + "," + format_double(row.boundary_distance) + "\n";
  }
  return out;
}

ClassMeans class_mean_fingerprints(const Dataset& dataset) {
  if (dataset.empty()) throw Error(Errc::empty_dataset, "no records to average");
  const int classes = dataset.class_count();
  ClassMeans out{dataset.meta.class_names, std::vector<std::size_t>(static_cast<std::size_t>(classes), 0),
                 Eigen::MatrixXd::Zero(classes, dataset.meta.m)};
  for (const auto& rec : dataset.records) {
    if (rec.label < 0 || rec.label >= classes) throw Error(Errc::label_out_of_range, "record label outside the taxonomy");
    out.means.row(rec.label) += rec.fingerprint.transpose();
    ++out.counts[static_cast<std::size_t>(rec.label)];
  }
  for (int c = 0; c < classes; ++c) {
    const auto n = out.counts[static_cast<std::size_t>(c)];
    if (n == 0) {
      out.means.row(c).setConstant(std::numeric_limits<double>::quiet_NaN());
    } else {
      out.means.row(c) /= static_cast<double>(n);
    }
  }
  return out;
}

std::string class_means_csv(const ClassMeans& means) {
  std::string out = "class_id,class_name,count";
  for (Eigen::Index k = 1; k <= means.means.cols(); ++k) out += ",w_" + std::to_string(k);
  out += "\n";
  for (Eigen::Index c = 0; c < means.means.rows(); ++c) {
    if (means.counts[static_cast<std::size_t>(c)] == 0) continue;
    out += std::to_string(c) + "," + means.class_names[static_cast<std::size_t>(c)] + "," +
           std::to_string(means.counts[static_cast<std::size_t>(c)]);
    for (Eigen::Index k = 0; k < means.means.cols(); ++k) out += "," + format_double(means.means(c, k));
    out += "\n";
  }
  return out;
}

Eigen::VectorXd circular_cross_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() == 0) throw Error(Errc::shape_error, "cross-correlation needs equal, non-empty vectors");
  const Eigen::Index m = a.size();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
  for (Eigen::Index s = 0; s < m; ++s) {
    for (Eigen::Index k = 0; k < m; ++k) c[s] += a[k] * b[(k + s) % m];
  }
  return c;
}

int best_circular_offset(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return detail::argmax_first(circular_cross_correlation(a, b));
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(Errc::empty_dataset, "median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error(Errc::io_error, "failed writing " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace rayfp
