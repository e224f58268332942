#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>

#include <doctest.h>

#include "rayfp/dataset.hpp"

using namespace rayfp;

namespace {

Dataset small_dataset() {
  std::vector<Scene> scenes{gen_double_dot_2d(SceneParams{}, 1), gen_double_dot_2d(SceneParams{}, 2)};
  return build_dataset(scenes, evenly_spaced_directions_2d(5), 40, WeightFunction::reciprocal(), 9);
}

std::string error_text(const std::function<void()>& fn, Errc* code = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (code) *code = e.code();
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("grid points") {
  const Box box2{Eigen::Vector2d(0, 0), Eigen::Vector2d(300, 300)};
  const auto g = grid_points(box2, 37);
  CHECK(g.size() == 1369);
  CHECK(g.front() == Eigen::Vector2d(0, 0));
  CHECK(g.back() == Eigen::Vector2d(300, 300));
  CHECK(g[1][0] == 0.0);
  CHECK(g[1][1] > 0.0);

  const Box box3{Eigen::Vector3d::Zero(), Eigen::Vector3d::Constant(300)};
  CHECK(grid_points(box3, 26).size() == 17576);

  Eigen::VectorXd lo(1), hi(1);
  lo << 0;
  hi << 1;
  const auto line = grid_points(Box{lo, hi}, 2);
  REQUIRE(line.size() == 2);
  CHECK(line[0][0] == 0.0);
  CHECK(line[1][0] == 1.0);

  CHECK_THROWS_AS(grid_points(box2, 1), Error);
  CHECK_THROWS_AS(grid_points(Box{Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 5)}, 4), Error);
}

TEST_CASE("build_dataset sizes and labels") {
  const auto scenes = std::vector<Scene>{gen_double_dot_2d(SceneParams{}, 3)};
  const auto tiny = build_dataset(scenes, evenly_spaced_directions_2d(6), 60, WeightFunction::reciprocal(), 2);
  CHECK(tiny.size() == 4);

  std::vector<Scene> twenty;
  for (std::uint64_t s = 0; s < 20; ++s) twenty.push_back(gen_double_dot_2d(SceneParams{}, s));
  const auto full = build_dataset(twenty, evenly_spaced_directions_2d(6), 60, WeightFunction::reciprocal(), 37);
  CHECK(full.size() == 27380);
  CHECK(full.meta.seeds.size() == 20);
  CHECK(full.meta.class_names == std::vector<std::string>{"ND", "SD_L", "SD_C", "SD_R", "DD"});
  for (std::size_t i = 0; i < full.size(); i += 97) {
    const auto& rec = full.records[i];
    const Scene& s = twenty[i / 1369];
    CHECK(rec.scene_id == s.id());
    CHECK(rec.label == s.label_at(rec.center).label.id);
    CHECK(rec.fingerprint.size() == 6);
    CHECK(rec.m == 6);
    CHECK(rec.r == 60);
  }

  const auto three = build_dataset({gen_triple_dot_3d(SceneParams{}, 0)}, directions_3d(6, DirectionScheme::axes_3d), 60,
                                   WeightFunction::reciprocal(), 26);
  CHECK(three.size() == 17576);
  CHECK(three.meta.direction_scheme == "axes-3d");

  Errc code{};
  error_text([&] { build_dataset({gen_double_dot_2d(SceneParams{}, 0), gen_triple_dot_3d(SceneParams{}, 0)},
                                 evenly_spaced_directions_2d(6), 60, WeightFunction::reciprocal(), 3); },
             &code);
  CHECK(code == Errc::schema_error);
  CHECK_THROWS_AS(build_dataset({}, evenly_spaced_directions_2d(6), 60, WeightFunction::reciprocal(), 3), Error);
}

TEST_CASE("split") {
  std::vector<Scene> twenty;
  for (std::uint64_t s = 0; s < 20; ++s) twenty.push_back(gen_double_dot_2d(SceneParams{}, s));
  const auto full = build_dataset(twenty, evenly_spaced_directions_2d(3), 10, WeightFunction::reciprocal(), 37);
  const auto [train, val] = split(full, SplitSpec{0.8, 4});
  CHECK(train.size() == 21904);
  CHECK(val.size() == 5476);

  Dataset five = full;
  five.records.resize(5);
  const auto [t5, v5] = split(five, SplitSpec{0.8, 1});
  CHECK(t5.size() == 4);
  CHECK(v5.size() == 1);

  const Dataset d = small_dataset();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (double frac : {0.1, 0.5, 0.8, 0.95}) {
      const auto [a, b] = split(d, SplitSpec{frac, seed});
      CHECK(a.size() + b.size() == d.size());
      std::multiset<std::string> keys, all;
      auto key = [](const FingerprintRecord& r) {
        return r.scene_id + ":" + std::to_string(r.center[0]) + "," + std::to_string(r.center[1]);
      };
      for (const auto& r : a.records) keys.insert(key(r));
      for (const auto& r : b.records) keys.insert(key(r));
      for (const auto& r : d.records) all.insert(key(r));
      CHECK(keys == all);
      CHECK(a.meta == d.meta);
    }
  }
  CHECK(split(d, SplitSpec{0.8, 7}) == split(d, SplitSpec{0.8, 7}));
  CHECK(!(split(d, SplitSpec{0.8, 7}).first == split(d, SplitSpec{0.8, 8}).first));
  CHECK_THROWS_AS(split(Dataset{d.meta, {}}, SplitSpec{}), Error);
  CHECK_THROWS_AS(split(d, SplitSpec{1.0, 0}), Error);
}

TEST_CASE("serialization round trip") {
  const Dataset d = small_dataset();
  for (auto fmt : {DatasetFormat::jsonl, DatasetFormat::csv}) {
    const std::string text = dataset_to_string(d, fmt);
    const Dataset back = dataset_from_string(text, fmt);
    CHECK(back == d);
    CHECK(dataset_to_string(back, fmt) == text);

    const Dataset empty{d.meta, {}};
    const std::string etext = dataset_to_string(empty, fmt);
    CHECK(std::count(etext.begin(), etext.end(), '\n') == (fmt == DatasetFormat::csv ? 2 : 1));
    CHECK(dataset_from_string(etext, fmt) == empty);
  }
  CHECK(dataset_to_string(d, DatasetFormat::jsonl) == dataset_to_string(small_dataset(), DatasetFormat::jsonl));

  const auto path = (std::filesystem::temp_directory_path() / "rayfp_ds_test.csv").string();
  write_dataset(path, d, format_for_path(path));
  CHECK(read_dataset(path, format_for_path(path)) == d);
  std::remove(path.c_str());
  CHECK(format_for_path("a/b.jsonl") == DatasetFormat::jsonl);
  CHECK_THROWS_AS(read_dataset("/nonexistent/x.jsonl", DatasetFormat::jsonl), Error);
}

TEST_CASE("serialization errors") {
  const Dataset d = small_dataset();

  std::string csv = dataset_to_string(d, DatasetFormat::csv);
  // Drop the last field of the first data row (line 3).
  const auto row_start = csv.find('\n', csv.find('\n') + 1) + 1;
  const auto row_end = csv.find('\n', row_start);
  const auto last_comma = csv.rfind(',', row_end);
  csv.erase(last_comma, row_end - last_comma);
  Errc code{};
  const std::string msg = error_text([&] { dataset_from_string(csv, DatasetFormat::csv); }, &code);
  CHECK(code == Errc::schema_error);
  CHECK(msg.find("line 3") != std::string::npos);

  std::string jsonl = dataset_to_string(d, DatasetFormat::jsonl);
  const auto second = jsonl.find('\n') + 1;
  jsonl.insert(second, "garbage");
  const std::string jmsg = error_text([&] { dataset_from_string(jsonl, DatasetFormat::jsonl); }, &code);
  CHECK(code == Errc::parse_error);
  CHECK(jmsg.find("line 2") != std::string::npos);

  // A record with the wrong number of weights.
  std::string wrong = dataset_to_string(d, DatasetFormat::jsonl);
  const auto fp = wrong.find("\"fp\":[") + 6;
  wrong.insert(fp, "0.5,");
  error_text([&] { dataset_from_string(wrong, DatasetFormat::jsonl); }, &code);
  CHECK(code == Errc::schema_error);

  CHECK_THROWS_AS(dataset_from_string("", DatasetFormat::jsonl), Error);
  CHECK_THROWS_AS(dataset_from_string("scene_id,label\n", DatasetFormat::csv), Error);
}

TEST_CASE("to_labeled layout") {
  const Dataset d = small_dataset();
  const auto l = to_labeled(d);
  CHECK(l.inputs.rows() == 5);
  CHECK(l.size() == static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(l.inputs.col(static_cast<Eigen::Index>(i)) == d.records[i].fingerprint);
    CHECK(l.labels[i] == d.records[i].label);
  }
}
