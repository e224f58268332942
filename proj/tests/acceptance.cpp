#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <unistd.h>

#include "oracles.hpp"
#include "rayfp/experiments.hpp"

using namespace rayfp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

Eigen::VectorXd v2(double a, double b) { return Eigen::Vector2d(a, b); }

TrialSetup default_2d() {
  TrialSetup s;
  s.dims = 2;
  s.grid_per_axis = 37;
  return s;
}

RunResult cell(const std::vector<Scene>& scenes, int m, int r, int runs, const TrialSetup& setup) {
  SweepSpec spec;
  spec.ray_counts = {m};
  spec.ray_lengths_px = {r};
  spec.runs_per_cell = runs;
  spec.setup = setup;
  return run_sweep(spec, scenes).front();
}

Outcome gradients() {
  const auto t0 = Clock::now();
  double worst = 0;
  const int cases = 120;
  for (int i = 0; i < cases; ++i) {
    const auto c = oracle::random_grad_case(static_cast<std::uint64_t>(i) + 1000);
    worst = std::max(worst, oracle::gradient_check(c.params, c.x, c.y, 1e-5));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 10.0,
          std::to_string(cases) + " cases, max rel err " + std::to_string(worst) + ", " + fmt(secs, 2) + " s"};
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  const WeightFunction rec = WeightFunction::reciprocal();
  std::vector<Scene> scenes;
  for (std::uint64_t s = 0; s < 6; ++s) scenes.push_back(gen_double_dot_2d(SceneParams{}, s));
  for (std::uint64_t s = 0; s < 2; ++s) scenes.push_back(gen_triple_dot_3d(SceneParams{}, s));
  scenes.push_back(square_scene(20));
  int mismatches = 0;
  long rays = 0;
  for (int i = 0; i < 1000; ++i) {
    const Scene& s = scenes[rng.below(scenes.size())];
    Eigen::VectorXd x(s.dims());
    for (int d = 0; d < s.dims(); ++d) x[d] = rng.uniform(s.extent().lo[d], s.extent().hi[d]);
    const int m = 1 + static_cast<int>(rng.below(18));
    const int r = 1 + static_cast<int>(rng.below(100));
    const DirectionSet dirs = s.dims() == 2 ? evenly_spaced_directions_2d(m, rng.uniform(0, 6.3))
                                            : directions_3d(m < 6 ? 6 : m, m < 6 ? DirectionScheme::axes_3d
                                                                                 : DirectionScheme::fibonacci_3d);
    const auto fp = fingerprint_point(s, x, dirs, r, rec);
    const auto brute = oracle::brute_fingerprint(s, x, dirs, r, rec);
    mismatches += (fp.weights.array() == brute.array()).all() ? 0 : 1;
    rays += dirs.count();
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 30.0, "1000 cases (" + std::to_string(rays) + " rays), " +
                                              std::to_string(mismatches) + " mismatches, " + fmt(secs, 2) + " s"};
}

Outcome square_crossings() {
  const Scene sq = square_scene(20);
  const auto rec = WeightFunction::reciprocal();
  Eigen::MatrixXd d(2, 4);
  d << 1, 0, -1, 0, 0, 1, 0, -1;
  const DirectionSet axes = explicit_directions(d);
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  expect(detect_features(sq, make_ray<double>(v2(0, 0), Direction(v2(1, 0)), 60), 60).features.distances_px ==
             std::vector<int>{20},
         "+x from origin");
  expect(detect_features(sq, make_ray<double>(v2(0, 0), Direction::normalized(v2(1, 1)), 60), 60)
                 .features.distances_px == std::vector<int>{15},
         "diagonal from origin");
  const auto origin = fingerprint_point(sq, v2(0, 0), axes, 60, rec);
  for (int m = 0; m < 4; ++m) expect(origin.weights[m] == 0.05, "origin ray " + std::to_string(m));
  const auto off = fingerprint_point(sq, v2(10, 0), axes, 60, rec);
  expect(off.weights[0] == 0.1, "(10,0) +x");
  expect(off.weights[2] == 1.0 / 30, "(10,0) -x");
  // (10,0) up: crosses x1 + x2 = 20 at x2 = 10
  expect(off.weights[1] == 0.1, "(10,0) +y");
  std::string detail = "8 exact checks";
  for (const auto& f : failed) detail += "; failed " + f;
  return {failed.empty(), detail};
}

Outcome budgets() {
  const auto a = pixel_budget(12, 80);
  const auto b = pixel_budget(6, 60);
  return {a == 960 && b == 360, "pixel_budget(12,80)=" + std::to_string(a) + ", pixel_budget(6,60)=" + std::to_string(b)};
}

Outcome desk_2d() {
  const auto t0 = Clock::now();
  const auto scenes = make_scenes(2, 20, SceneParams{}, 0);
  const auto res = cell(scenes, 6, 60, 10, default_2d());
  const double secs = seconds_since(t0);
  return {res.mu >= 0.90 && res.sigma <= 0.03 && secs <= 600.0,
          "M=6 r=60 10 runs: mu " + fmt(res.mu) + ", sigma " + fmt(res.sigma) + ", " + fmt(secs, 1) + " s"};
}

Outcome trend_2d() {
  const auto scenes = make_scenes(2, 20, SceneParams{}, 0);
  std::vector<RunResult> rows;
  for (int r : {20, 40, 60, 80}) rows.push_back(cell(scenes, 6, r, 10, default_2d()));
  bool monotone = true;
  std::string detail;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail += "r=" + std::to_string(rows[i].r) + ": " + fmt(rows[i].mu) + "+-" + fmt(rows[i].sigma) + "; ";
    if (i > 0) {
      const double noise = std::max(rows[i].sigma, rows[i - 1].sigma);
      monotone = monotone && rows[i].mu >= rows[i - 1].mu - noise;
    }
  }
  const double gain = rows[2].mu - rows[0].mu;
  detail += "mu(60)-mu(20) = " + fmt(gain) + (monotone ? ", non-decreasing within 1 sigma" : ", drops beyond 1 sigma");
  return {gain >= 0.05 && monotone, detail};
}

Outcome trend_3d() {
  const auto t0 = Clock::now();
  const SweepSpec d = SweepSpec::triple_dot_defaults();
  const auto scenes = make_scenes(3, d.scene_count, d.scene_params, d.setup.master_seed);
  const auto lo = cell(scenes, 6, 60, 5, d.setup);
  const auto hi = cell(scenes, 18, 60, 5, d.setup);
  const double secs = seconds_since(t0);
  return {hi.mu - lo.mu >= 0.05 && secs <= 900.0, "mu(M=6) " + fmt(lo.mu) + ", mu(M=18) " + fmt(hi.mu) + ", gain " +
                                                      fmt(hi.mu - lo.mu) + ", " + fmt(secs, 1) + " s"};
}

Outcome architectures() {
  ArchSweepSpec spec;
  spec.cells = {{6, 60}};
  spec.runs_per_cell = 10;
  spec.setup = default_2d();
  const auto cells = arch_sweep(spec);
  double lo = 1, hi = 0;
  std::string detail;
  for (const auto& c : cells) {
    lo = std::min(lo, c.mu);
    hi = std::max(hi, c.mu);
    detail += format_arch(c.arch) + " " + fmt(c.mu) + "; ";
  }
  detail += "span " + fmt(hi - lo);
  return {hi - lo <= 0.02, detail};
}

Outcome failure_mode() {
  const TrialSetup setup = default_2d();
  const int m = 6, r = 50;
  const auto scenes = make_scenes(2, 20, SceneParams{}, setup.master_seed);
  const auto dirs = trial_directions(setup, m);
  const auto gamma = WeightFunction::parse(setup.gamma);
  const Dataset data = build_dataset(scenes, dirs, r, gamma, setup.grid_per_axis);
  const auto seeds = trial_seeds(setup.master_seed, m, r, 0);
  const MlpSpec spec{m, setup.arch, static_cast<int>(data.meta.class_names.size())};
  const auto trained = train<double>(spec, to_labeled(data), std::nullopt,
                                     TrainConfig{setup.epochs, setup.batch_size, seeds.shuffle, setup.learning_rate},
                                     seeds.init);
  const auto held = make_test_scenes(2, 3, SceneParams{}, setup.master_seed);
  const auto rows = failure_map(trained.params, held, dirs, r, gamma, setup.grid_per_axis);
  std::vector<double> wrong, right;
  for (const auto& row : rows) (row.correct ? right : wrong).push_back(row.boundary_distance);
  if (wrong.empty()) return {false, "no misclassified points to compare"};
  const double mw = median(wrong), mr = median(right);
  return {mw < mr, std::to_string(wrong.size()) + " wrong / " + std::to_string(right.size()) +
                       " right, median distance " + fmt(mw, 2) + " vs " + fmt(mr, 2)};
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / ("rayfp_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string cli = RAYFP_CLI_PATH;
  // Each command writes into its run directory; inputs for later commands
  // come from the same run.
  const std::vector<std::pair<std::string, std::vector<std::string>>> steps{
      {"gen-scenes --dim 2 --count 2 --seed 3 --out {d}/scenes.json", {"scenes.json"}},
      {"gen-scenes --dim 3 --count 1 --seed 3 --out {d}/scenes3.json", {"scenes3.json"}},
      {"gen-scenes --kind square --square-a 20 --out {d}/square.json", {"square.json"}},
      {"gen-scenes --dim 2 --count 1 --seed 3 --held-out --out {d}/held.json", {"held.json"}},
      {"fingerprint --scenes {d}/scenes.json --rays 6 --length 40 --grid 12 --out {d}/data.jsonl", {"data.jsonl"}},
      {"fingerprint --scenes {d}/scenes3.json --rays 6 --length 40 --grid 6 --scheme axes-3d --out {d}/data3.csv",
       {"data3.csv"}},
      {"train --data {d}/data.jsonl --arch 16-8 --epochs 3 --seed 9 --history {d}/hist.csv --out {d}/model.json",
       {"model.json", "hist.csv"}},
      {"eval --model {d}/model.json --data {d}/data.jsonl --out {d}/metrics.json", {"metrics.json"}},
      {"sweep --dim 2 --rays 3,6 --lengths 20,40 --runs 2 --scenes 2 --grid 10 --arch 8 --epochs 2 --out {d}/curves.csv",
       {"curves.csv"}},
      {"arch-sweep --cells 6x40 --archs 8,8-4 --runs 2 --scenes 2 --grid 10 --epochs 2 --out {d}/archs.csv",
       {"archs.csv"}},
      {"failure-map --model {d}/model.json --scenes {d}/held.json --grid 12 --out {d}/failures.csv", {"failures.csv"}},
      {"class-means --data {d}/data.jsonl --out {d}/means.csv", {"means.csv"}},
  };
  std::map<std::string, std::string> first;
  std::vector<std::string> problems;
  int files = 0;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path dir = root / ("run" + std::to_string(pass));
    fs::create_directories(dir);
    for (const auto& [args, outputs] : steps) {
      std::string a = args;
      for (std::size_t at; (at = a.find("{d}")) != std::string::npos;) a.replace(at, 3, dir.string());
      const std::string cmd = "\"" + cli + "\" " + a + " > /dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) {
        problems.push_back("failed: " + args.substr(0, args.find(' ')));
        continue;
      }
      for (const auto& out : outputs) {
        const std::string bytes = file_bytes(dir / out);
        if (pass == 0) {
          first[out] = bytes;
        } else {
          ++files;
          if (bytes.empty() || bytes != first[out]) problems.push_back("differs: " + out);
        }
      }
    }
  }
  fs::remove_all(root);
  std::string detail = std::to_string(steps.size()) + " commands, " + std::to_string(files) + " files compared";
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

Outcome phase_offset() {
  const int m = 12, r = 60;
  const TrialSetup setup = default_2d();
  const auto scenes = make_scenes(2, 20, SceneParams{}, setup.master_seed);
  const Dataset data = build_dataset(scenes, trial_directions(setup, m), r, WeightFunction::parse(setup.gamma),
                                     setup.grid_per_axis);
  const auto cm = class_mean_fingerprints(data);
  const Eigen::VectorXd sd_l = cm.means.row(1).transpose();
  const Eigen::VectorXd sd_r = cm.means.row(3).transpose();
  const int offset = best_circular_offset(sd_l, sd_r);
  return {offset == m / 2, "best circular offset SD_L vs SD_R at M=12, r=60: " + std::to_string(offset) + " (want 6)"};
}

const std::map<int, std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::map<int, std::pair<std::string, std::function<Outcome()>>> table{
      {1, {"gradient check", gradients}},
      {2, {"fingerprint oracle equivalence", oracle_equivalence}},
      {3, {"square analytic crossings", square_crossings}},
      {4, {"pixel budgets", budgets}},
      {5, {"2D accuracy at M=6 r=60", desk_2d}},
      {6, {"2D ray-length trend", trend_2d}},
      {7, {"3D ray-count trend", trend_3d}},
      {8, {"architecture insensitivity", architectures}},
      {9, {"failures lie near boundaries", failure_mode}},
      {10, {"CLI determinism", cli_determinism}},
      {11, {"SD_L/SD_R phase offset", phase_offset}},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      which.push_back(std::atoi(argv[++i]));
    } else if (a == "--all") {
      for (const auto& [n, _] : criteria()) which.push_back(n);
    } else {
      std::cerr << "usage: rayfp_acceptance --criterion N | --all\n";
      return 2;
    }
  }
  if (which.empty()) {
    for (const auto& [n, _] : criteria()) which.push_back(n);
  }
  int failed = 0;
  for (int n : which) {
    const auto it = criteria().find(n);
    if (it == criteria().end()) {
      std::cerr << "unknown criterion " << n << "\n";
      return 2;
    }
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << it->second.first << "): " << o.detail
              << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
