#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rayfp/dataset.hpp"
#include "rayfp/experiments.hpp"
#include "rayfp/format.hpp"
#include "rayfp/nn.hpp"
#include "rayfp/scene.hpp"

using namespace rayfp;
using nlohmann::json;

namespace {

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

int parse_int(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::parse_error, "bad " + what + " '" + text + "'");
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  for (const auto& p : split_on(text, ',')) out.push_back(parse_int(p, what));
  return out;
}

// "10:80:10" (inclusive range) or "20,40,60".
std::vector<int> parse_lengths(const std::string& text) {
  if (text.find(':') == std::string::npos) return parse_int_list(text, "ray length");
  const auto parts = split_on(text, ':');
  if (parts.size() != 3) throw Error(Errc::parse_error, "ray lengths must look like start:stop:step");
  const int a = parse_int(parts[0], "range start");
  const int b = parse_int(parts[1], "range stop");
  const int step = parse_int(parts[2], "range step");
  if (step < 1 || b < a) throw Error(Errc::parse_error, "empty ray length range '" + text + "'");
  std::vector<int> out;
  for (int r = a; r <= b; r += step) out.push_back(r);
  return out;
}

// "5x50,6x60"
std::vector<std::pair<int, int>> parse_cells(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  for (const auto& cell : split_on(text, ',')) {
    const auto mr = split_on(cell, 'x');
    if (mr.size() != 2) throw Error(Errc::parse_error, "cell '" + cell + "' is not MxR");
    out.emplace_back(parse_int(mr[0], "ray count"), parse_int(mr[1], "ray length"));
  }
  return out;
}

// "64-32,128-64-32"
std::vector<std::vector<int>> parse_archs(const std::string& text) {
  std::vector<std::vector<int>> out;
  for (const auto& a : split_on(text, ',')) out.push_back(parse_arch(a));
  return out;
}

DirectionSet directions_for(int dims, int m, const std::string& scheme, double offset) {
  if (scheme.empty()) return default_directions(dims, m, offset);
  switch (direction_scheme_from_string(scheme)) {
    case DirectionScheme::evenly_spaced_2d:
      if (dims != 2) throw Error(Errc::unsupported_scheme, "evenly-spaced-2d needs a 2D scene");
      return evenly_spaced_directions_2d(m, offset);
    case DirectionScheme::axes_3d:
    case DirectionScheme::fibonacci_3d:
      if (dims != 3) throw Error(Errc::unsupported_scheme, scheme + " needs a 3D scene");
      return directions_3d(m, direction_scheme_from_string(scheme));
    case DirectionScheme::explicit_set:
      break;
  }
  throw Error(Errc::unsupported_scheme, "cannot rebuild an explicit direction set from its name");
}

void write_json(const std::string& path, const json& doc) { write_text(path, doc.dump(1) + "\n"); }

struct SceneFlags {
  SceneParams params;
  std::string taxonomy = "collapsed";

  void add(CLI::App* cmd) {
    cmd->add_option("--spacing", params.line_spacing_px, "mean line/plane spacing in px");
    cmd->add_option("--jitter", params.spacing_jitter_frac, "relative spacing jitter");
    cmd->add_option("--extent", params.extent_px, "extent edge length in px");
    cmd->add_option("--band-halfwidth", params.center_band_halfwidth_px, "SD_C band half-width in px");
    cmd->add_option("--first-line-frac", params.first_line_frac);
    cmd->add_option("--first-plane-frac", params.first_plane_frac);
    cmd->add_option("--plane-tilt", params.plane_tilt);
    cmd->add_option("--taxonomy", taxonomy, "3D class map")->check(CLI::IsMember({"collapsed", "resolved"}));
  }

  SceneParams resolved() const {
    SceneParams p = params;
    p.taxonomy_3d = taxonomy == "resolved" ? TripleDotTaxonomy::resolved : TripleDotTaxonomy::collapsed;
    p.validate();
    return p;
  }
};

struct SetupFlags {
  std::string arch = "256,128,32";
  int epochs = 50;
  int batch = 32;
  double lr = 1e-3;
  int grid = 0;
  std::string gamma = "reciprocal";
  double offset = 0.0;

  void add(CLI::App* cmd, bool with_arch = true) {
    if (with_arch) cmd->add_option("--arch", arch, "hidden layer widths");
    cmd->add_option("--epochs", epochs);
    cmd->add_option("--batch", batch);
    cmd->add_option("--lr", lr);
    cmd->add_option("--grid", grid, "grid points per axis (37 in 2D, 26 in 3D by default)");
    cmd->add_option("--gamma", gamma);
    cmd->add_option("--offset-angle", offset, "2D direction offset in degrees");
  }

  TrialSetup build(int dims, std::uint64_t seed) const {
    TrialSetup s;
    s.dims = dims;
    s.arch = parse_arch(arch);
    s.master_seed = seed;
    s.grid_per_axis = grid > 0 ? grid : (dims == 2 ? 37 : 26);
    s.gamma = gamma;
    s.offset_angle = offset;
    s.epochs = epochs;
    s.batch_size = batch;
    s.learning_rate = lr;
    WeightFunction::parse(gamma);
    return s;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ray-based fingerprinting of charge-stability scenes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rayfp 0.1.0");

  // gen-scenes
  auto* gen = app.add_subcommand("gen-scenes", "generate stylized scenes");
  int gen_dim = 2;
  std::string gen_kind;
  int gen_count = 1;
  std::uint64_t gen_seed = 0;
  double square_a = 20.0;
  bool gen_held_out = false;
  std::string gen_out;
  SceneFlags gen_scene;
  gen->add_option("--dim", gen_dim)->check(CLI::IsMember({2, 3}));
  gen->add_option("--kind", gen_kind)->check(CLI::IsMember({"double-dot", "triple-dot", "square"}))
      ->description("double-dot in 2D, triple-dot in 3D by default");
  gen->add_option("--count", gen_count);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--square-a", square_a, "half-diagonal of the square scene");
  gen->add_flag("--held-out", gen_held_out, "draw seeds from the held-out stream");
  gen->add_option("--out", gen_out)->required();
  gen_scene.add(gen);

  // fingerprint
  auto* fp = app.add_subcommand("fingerprint", "fingerprint every grid point of every scene");
  std::string fp_scenes, fp_out, fp_scheme, fp_gamma = "reciprocal";
  int fp_rays = 6, fp_length = 60, fp_grid = 0;
  double fp_offset = 0.0;
  fp->add_option("--scenes", fp_scenes)->required();
  fp->add_option("--rays", fp_rays);
  fp->add_option("--length", fp_length);
  fp->add_option("--grid", fp_grid, "points per axis (37 in 2D, 26 in 3D by default)");
  fp->add_option("--gamma", fp_gamma);
  fp->add_option("--scheme", fp_scheme, "evenly-spaced-2d, axes-3d or fibonacci-3d");
  fp->add_option("--offset-angle", fp_offset);
  fp->add_option("--out", fp_out)->required();

  // train
  auto* tr = app.add_subcommand("train", "train a classifier on a fingerprint dataset");
  std::string tr_data, tr_out, tr_history, tr_arch = "256,128,32";
  int tr_epochs = 50, tr_batch = 32;
  double tr_lr = 1e-3;
  std::uint64_t tr_seed = 0;
  tr->add_option("--data", tr_data)->required();
  tr->add_option("--arch", tr_arch);
  tr->add_option("--epochs", tr_epochs);
  tr->add_option("--batch", tr_batch);
  tr->add_option("--lr", tr_lr);
  tr->add_option("--seed", tr_seed);
  tr->add_option("--history", tr_history, "per-epoch loss/accuracy CSV");
  tr->add_option("--out", tr_out)->required();

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a model on a dataset");
  std::string ev_model, ev_data, ev_out;
  ev->add_option("--model", ev_model)->required();
  ev->add_option("--data", ev_data)->required();
  ev->add_option("--out", ev_out)->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "accuracy over a grid of (M, r)");
  int sw_dim = 2, sw_runs = 0, sw_scenes = 0;
  std::string sw_rays, sw_lengths, sw_out;
  std::uint64_t sw_seed = 0;
  SetupFlags sw_setup;
  SceneFlags sw_scene;
  sw->add_option("--dim", sw_dim)->check(CLI::IsMember({2, 3}));
  sw->add_option("--rays", sw_rays, "comma list of M");
  sw->add_option("--lengths", sw_lengths, "start:stop:step or comma list of r");
  sw->add_option("--runs", sw_runs);
  sw->add_option("--scenes", sw_scenes, "scene count (20 in 2D, 1 in 3D by default)");
  sw->add_option("--seed", sw_seed);
  sw->add_option("--out", sw_out)->required();
  sw_setup.add(sw);
  sw_scene.add(sw);

  // arch-sweep
  auto* as = app.add_subcommand("arch-sweep", "architecture comparison table");
  std::string as_cells = "5x50,5x60,6x50,6x60", as_archs = "64-32,128-64-32,256-64-32,512-256-64-32", as_out;
  int as_runs = 50, as_scenes = 20;
  std::uint64_t as_seed = 0;
  SetupFlags as_setup;
  SceneFlags as_scene;
  as->add_option("--cells", as_cells);
  as->add_option("--archs", as_archs, "comma list of dash-separated widths");
  as->add_option("--runs", as_runs);
  as->add_option("--scenes", as_scenes);
  as->add_option("--seed", as_seed);
  as->add_option("--out", as_out)->required();
  as_setup.add(as, false);
  as_scene.add(as);

  // failure-map
  auto* fm = app.add_subcommand("failure-map", "per-point predictions and boundary distances");
  std::string fm_model, fm_scenes, fm_out;
  int fm_length = 0, fm_grid = 0;
  fm->add_option("--model", fm_model)->required();
  fm->add_option("--scenes", fm_scenes)->required();
  fm->add_option("--length", fm_length, "ray length; taken from the model by default");
  fm->add_option("--grid", fm_grid);
  fm->add_option("--out", fm_out)->required();

  // class-means
  auto* cm = app.add_subcommand("class-means", "mean fingerprint per class");
  std::string cm_data, cm_out;
  cm->add_option("--data", cm_data)->required();
  cm->add_option("--out", cm_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "rayfp: " << e.what() << "\n";
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (*gen) {
      const SceneParams params = gen_scene.resolved();
      std::vector<Scene> scenes;
      if (gen_kind.empty()) gen_kind = gen_dim == 3 ? "triple-dot" : "double-dot";
      if (gen_kind == "square") {
        if (gen_dim != 2) throw Error(Errc::invalid_parameter, "the square scene is 2D");
        if (gen_count != 1) throw Error(Errc::invalid_count, "the square scene is unique; use --count 1");
        scenes.push_back(square_scene(square_a));
      } else {
        const int expected = gen_kind == "double-dot" ? 2 : 3;
        if (gen_dim != expected) throw Error(Errc::invalid_parameter, gen_kind + " scenes have dimension " + std::to_string(expected));
        scenes = gen_held_out ? make_test_scenes(gen_dim, gen_count, params, gen_seed)
                              : make_scenes(gen_dim, gen_count, params, gen_seed);
      }
      write_scenes(gen_out, scenes);
    } else if (*fp) {
      const auto scenes = read_scenes(fp_scenes);
      if (scenes.empty()) throw Error(Errc::empty_dataset, "no scenes in " + fp_scenes);
      const int dims = scenes.front().dims();
      const int grid = fp_grid > 0 ? fp_grid : (dims == 2 ? 37 : 26);
      const Dataset data = build_dataset(scenes, directions_for(dims, fp_rays, fp_scheme, fp_offset), fp_length,
                                         WeightFunction::parse(fp_gamma), grid);
      write_dataset(fp_out, data, format_for_path(fp_out));
    } else if (*tr) {
      const Dataset data = read_dataset(tr_data, format_for_path(tr_data));
      const MlpSpec spec{data.meta.m, parse_arch(tr_arch), data.class_count()};
      const auto result = train<double>(spec, to_labeled(data), std::nullopt, TrainConfig{tr_epochs, tr_batch, tr_seed, tr_lr});
      const ModelMeta meta{data.meta.dims, data.meta.r, data.meta.gamma, data.meta.direction_scheme,
                           data.meta.offset_angle, data.meta.class_names};
      save_model(tr_out, result.params, meta);
      if (!tr_history.empty()) {
        std::string csv = "epoch,train_loss,train_accuracy\n";
        for (const auto& h : result.history) {
          csv += std::to_string(h.epoch) + "," + format_double(h.train_loss) + "," + format_double(h.train_accuracy) + "\n";
        }
        write_text(tr_history, csv);
      }
    } else if (*ev) {
      const SavedModel model = load_model(ev_model);
      const Dataset data = read_dataset(ev_data, format_for_path(ev_data));
      if (model.meta && model.meta->class_names != data.meta.class_names) {
        throw Error(Errc::schema_error, "model and dataset use different class maps");
      }
      const Evaluation e = evaluate(model.params, to_labeled(data));
      json confusion = json::array();
      for (Eigen::Index i = 0; i < e.confusion.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < e.confusion.cols(); ++j) row.push_back(e.confusion(i, j));
        confusion.push_back(row);
      }
      write_json(ev_out, {{"accuracy", e.accuracy},
                          {"n", data.size()},
                          {"m", data.meta.m},
                          {"r", data.meta.r},
                          {"class_names", data.meta.class_names},
                          {"confusion", confusion}});
    } else if (*sw) {
      SweepSpec spec = sw_dim == 2 ? SweepSpec::double_dot_defaults() : SweepSpec::triple_dot_defaults();
      spec.setup = sw_setup.build(sw_dim, sw_seed);
      spec.scene_params = sw_scene.resolved();
      if (!sw_rays.empty()) spec.ray_counts = parse_int_list(sw_rays, "ray count");
      if (!sw_lengths.empty()) spec.ray_lengths_px = parse_lengths(sw_lengths);
      if (sw_runs > 0) spec.runs_per_cell = sw_runs;
      if (sw_scenes > 0) spec.scene_count = sw_scenes;
      const auto results = sw_dim == 2 ? sweep_2d(spec) : sweep_3d(spec);
      emit_curves(results, sw_out);
    } else if (*as) {
      ArchSweepSpec spec;
      spec.archs = parse_archs(as_archs);
      spec.cells = parse_cells(as_cells);
      spec.runs_per_cell = as_runs;
      spec.scene_count = as_scenes;
      spec.setup = as_setup.build(2, as_seed);
      spec.scene_params = as_scene.resolved();
      write_text(as_out, arch_table_csv(spec, arch_sweep(spec)));
    } else if (*fm) {
      const SavedModel model = load_model(fm_model);
      const auto scenes = read_scenes(fm_scenes);
      if (scenes.empty()) throw Error(Errc::empty_dataset, "no scenes in " + fm_scenes);
      const int dims = scenes.front().dims();
      const ModelMeta meta = model.meta.value_or(ModelMeta{});
      if (model.meta && meta.dims != dims) throw Error(Errc::shape_error, "model was trained on another dimension");
      const int r = fm_length > 0 ? fm_length : meta.ray_length_px;
      if (r < 1) throw Error(Errc::invalid_length, "ray length unknown; pass --length");
      const int grid = fm_grid > 0 ? fm_grid : (dims == 2 ? 37 : 26);
      const DirectionSet dirs = directions_for(dims, model.params.spec.input_dim, meta.direction_scheme, meta.offset_angle);
      const auto rows = failure_map(model.params, scenes, dirs, r, WeightFunction::parse(meta.gamma), grid);
      write_text(fm_out, failure_map_csv(rows));
    } else if (*cm) {
      const Dataset data = read_dataset(cm_data, format_for_path(cm_data));
      write_text(cm_out, class_means_csv(class_mean_fingerprints(data)));
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n' || c == '\r') c = ' ';
    }
    std::cerr << "rayfp: " << msg << "\n";
    return 1;
  }
  return 0;
}
