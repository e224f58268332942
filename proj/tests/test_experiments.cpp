#include <cmath>
#include <set>
#include <sstream>

#include <doctest.h>

#include "rayfp/experiments.hpp"

using namespace rayfp;

namespace {

TrialSetup tiny_setup() {
  TrialSetup s;
  s.arch = {16};
  s.grid_per_axis = 12;
  s.epochs = 2;
  s.master_seed = 5;
  return s;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("seeds and summaries") {
  std::set<std::uint64_t> seen;
  for (int run = 0; run < 50; ++run) {
    const auto s = trial_seeds(1, 6, 60, run);
    seen.insert(s.split);
    seen.insert(s.init);
    seen.insert(s.shuffle);
  }
  CHECK(seen.size() == 150);
  CHECK(trial_seeds(1, 6, 60, 3).split == trial_seeds(1, 6, 60, 3).split);
  CHECK(trial_seeds(1, 6, 60, 3).split != trial_seeds(1, 6, 50, 3).split);

  const auto [mu, sd] = mean_and_std({1, 2, 3, 4});
  CHECK(mu == 2.5);
  CHECK(sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(mean_and_std({0.7}).second == 0.0);
  CHECK_THROWS_AS(mean_and_std({}), Error);

  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK_THROWS_AS(median({}), Error);
}

TEST_CASE("training and held-out scenes never share seeds") {
  const auto train = make_scenes(2, 20, SceneParams{}, 0);
  const auto test = make_scenes(2, 3, SceneParams{}, 0);
  const auto held = make_test_scenes(2, 3, SceneParams{}, 0);
  std::set<std::uint64_t> seeds;
  for (const auto& s : train) seeds.insert(s.seed());
  CHECK(seeds.size() == 20);
  for (const auto& s : held) CHECK(seeds.count(s.seed()) == 0);
  CHECK(test[0] == train[0]);
  CHECK_THROWS_AS(make_scenes(4, 1, SceneParams{}, 0), Error);
}

TEST_CASE("run_trial is deterministic") {
  const auto scenes = make_scenes(2, 2, SceneParams{}, 5);
  const auto setup = tiny_setup();
  const double a = run_trial(scenes, 6, 30, 0, setup);
  CHECK(a == run_trial(scenes, 6, 30, 0, setup));
  CHECK(a >= 0.0);
  CHECK(a <= 1.0);
}

TEST_CASE("sweeps") {
  CHECK(SweepSpec::double_dot_defaults().ray_counts.size() * SweepSpec::double_dot_defaults().ray_lengths_px.size() == 40);
  CHECK(SweepSpec::double_dot_defaults().runs_per_cell == 50);
  const auto d3 = SweepSpec::triple_dot_defaults();
  CHECK(d3.ray_counts.front() == 6);
  CHECK(d3.ray_counts.back() == 18);
  CHECK(d3.ray_lengths_px == std::vector<int>{60});
  CHECK(d3.runs_per_cell == 10);

  SweepSpec spec;
  spec.ray_counts = {3, 6};
  spec.ray_lengths_px = {10, 30};
  spec.runs_per_cell = 3;
  spec.scene_count = 2;
  spec.setup = tiny_setup();
  const auto results = sweep_2d(spec);
  REQUIRE(results.size() == 4);
  for (const auto& r : results) {
    CHECK(r.pixel_budget == static_cast<std::uint64_t>(r.m * r.r));
    CHECK(r.n_runs == 3);
    CHECK(r.accuracies.size() == 3);
    const auto [mu, sd] = mean_and_std(r.accuracies);
    CHECK(r.mu == mu);
    CHECK(r.sigma == sd);
    CHECK(r.sigma >= 0);
  }
  CHECK(results[0].m == 3);
  CHECK(results[1].r == 30);
  const std::string csv = curves_csv(results);
  CHECK(csv == curves_csv(sweep_2d(spec)));
  CHECK(line_count(csv) == 5);

  spec.runs_per_cell = 0;
  CHECK_THROWS_AS(sweep_2d(spec), Error);
  spec.runs_per_cell = 1;
  CHECK_THROWS_AS(sweep_3d(spec), Error);
}

TEST_CASE("curves CSV") {
  RunResult r{6, 60, 360, 0.9, 0.01, 50, {}};
  const std::string csv = curves_csv({r, r});
  std::istringstream in(csv);
  std::string header, row;
  std::getline(in, header);
  CHECK(header == "M,r,pixel_budget,mu,sigma,lo3,hi3,n_runs,cnn_ref_2d,marker_slices_3d,marker_scan_2d,marker_full_3d");
  std::getline(in, row);
  std::vector<std::string> f;
  std::stringstream rs(row);
  for (std::string x; std::getline(rs, x, ',');) f.push_back(x);
  REQUIRE(f.size() == 12);
  CHECK(std::stod(f[5]) == doctest::Approx(0.87));
  CHECK(std::stod(f[6]) == doctest::Approx(0.93));
  CHECK(f[8] == "0.959");
  CHECK(line_count(csv) == 3);
  CHECK_THROWS_AS(emit_curves({}, "/tmp/never.csv"), Error);
}

TEST_CASE("published reference values") {
  CHECK(paper_reference(2, {64, 32}, 6, 60) == 0.963);
  CHECK(paper_reference(2, {512, 256, 64, 32}, 6, 60) == 0.963);
  CHECK(paper_reference(2, {256, 64, 32}, 5, 50) == 0.942);
  CHECK(paper_reference(2, {256, 128, 32}, 6, 60) == 0.964);
  CHECK(paper_reference(3, {256, 128, 32}, 6, 60) == 0.662);
  CHECK(paper_reference(3, {256, 128, 32}, 18, 60) == 0.799);
  CHECK(std::isnan(paper_reference(2, {7}, 6, 60)));
  CHECK(kCnnReference2d == 0.959);
}

TEST_CASE("architecture table layout") {
  ArchSweepSpec spec;
  std::vector<ArchCell> cells;
  for (const auto& a : spec.archs) {
    for (const auto& [m, r] : spec.cells) cells.push_back({a, m, r, 0.95, 0.004, 50, {}});
  }
  const std::string csv = arch_table_csv(spec, cells);
  CHECK(line_count(csv) == 5);
  CHECK(csv.rfind("dnn,mu_5x50,sigma_5x50,n_5x50,paper_mu_5x50,mu_5x60", 0) == 0);
  CHECK(csv.find("\n64-32,0.95,0.004,50,0.936,") != std::string::npos);
  cells.pop_back();
  CHECK_THROWS_AS(arch_table_csv(spec, cells), Error);

  ArchSweepSpec small;
  small.archs = {{8}, {8, 4}};
  small.cells = {{6, 30}};
  small.runs_per_cell = 2;
  small.scene_count = 2;
  small.setup = tiny_setup();
  const auto result = arch_sweep(small);
  REQUIRE(result.size() == 2);
  CHECK(result[1].arch == std::vector<int>{8, 4});
  CHECK(result[0].n_runs == 2);
}

TEST_CASE("failure map") {
  const auto scenes = make_test_scenes(2, 3, SceneParams{}, 1);
  const auto dirs = evenly_spaced_directions_2d(6);
  const auto params = init_params<double>(MlpSpec{6, {8}, 5}, 2);
  const auto rows = failure_map(params, scenes, dirs, 50, WeightFunction::reciprocal(), 10);
  CHECK(rows.size() == 300);
  for (const auto& row : rows) {
    CHECK(row.correct == (row.true_label == row.predicted));
    CHECK(row.boundary_distance >= 0);
  }
  CHECK(line_count(failure_map_csv(rows)) == 301);
  CHECK(failure_map(params, {scenes[0]}, dirs, 50, WeightFunction::reciprocal(), 37).size() == 1369);

  // A classifier that always says "inside" is right everywhere on a single cell.
  auto inside = MlpParams<double>::zeros(MlpSpec{4, {}, 2});
  inside.layers[0].bias << 0, 1;
  const auto one = single_cell_scene(square_scene(5).extent());
  const auto all_right = failure_map(inside, {one}, evenly_spaced_directions_2d(4), 10, WeightFunction::reciprocal(), 5);
  CHECK(all_right.size() == 25);
  for (const auto& row : all_right) CHECK(row.correct);

  CHECK_THROWS_AS(failure_map(params, scenes, evenly_spaced_directions_2d(5), 50, WeightFunction::reciprocal(), 5), Error);
}

TEST_CASE("class means") {
  Dataset d;
  d.meta.dims = 2;
  d.meta.m = 3;
  d.meta.r = 10;
  d.meta.class_names = {"A", "B"};
  Eigen::VectorXd fp(3);
  fp << 0.5, 0.0, 0.25;
  for (int i = 0; i < 4; ++i) d.records.push_back({"s", Eigen::Vector2d(i, 0), 3, 10, fp, 0, false});
  const auto means = class_mean_fingerprints(d);
  CHECK(Eigen::VectorXd(means.means.row(0).transpose()) == fp);
  CHECK(means.counts[0] == 4);
  CHECK(means.counts[1] == 0);
  CHECK(std::isnan(means.means(1, 0)));
  CHECK(class_means_csv(means) == "class_id,class_name,count,w_1,w_2,w_3\n0,A,4,0.5,0,0.25\n");
  CHECK_THROWS_AS(class_mean_fingerprints(Dataset{d.meta, {}}), Error);

  // ND points far from every line see nothing on most rays.
  const auto scenes = make_scenes(2, 4, SceneParams{}, 3);
  const auto data = build_dataset(scenes, evenly_spaced_directions_2d(12), 30, WeightFunction::reciprocal(), 37);
  const auto cm = class_mean_fingerprints(data);
  double nd_sum = 0;
  int nd_n = 0;
  for (const auto& rec : data.records) {
    if (rec.label != 0) continue;
    nd_sum += rec.fingerprint.sum();
    ++nd_n;
  }
  REQUIRE(nd_n > 0);
  CHECK(cm.means.row(0).sum() == doctest::Approx(nd_sum / nd_n));
  CHECK(cm.means.row(0).sum() < cm.means.row(4).sum());
}

TEST_CASE("circular cross-correlation") {
  Eigen::VectorXd a(5), b(5);
  a << 1, 2, 3, 4, 5;
  b << 5, 1, 2, 3, 4;
  const auto c = circular_cross_correlation(a, b);
  double manual = 0;
  for (int k = 0; k < 5; ++k) manual += a[k] * b[(k + 2) % 5];
  CHECK(c[2] == manual);
  CHECK(best_circular_offset(a, b) == 1);

  Eigen::VectorXd spike = Eigen::VectorXd::Zero(12);
  spike[2] = 1;
  Eigen::VectorXd moved = Eigen::VectorXd::Zero(12);
  moved[8] = 1;
  CHECK(best_circular_offset(spike, moved) == 6);
  CHECK(best_circular_offset(Eigen::VectorXd::Ones(4), Eigen::VectorXd::Ones(4)) == 0);
  CHECK_THROWS_AS(circular_cross_correlation(a, Eigen::VectorXd::Ones(4)), Error);
}
