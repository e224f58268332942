#include "rayfp/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "rayfp/format.hpp"
#include "rayfp/random.hpp"

namespace rayfp {

using nlohmann::json;

namespace {

bool same_vector(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

json meta_json(const DatasetMeta& m) {
  return {{"dims", m.dims},
          {"m", m.m},
          {"r", m.r},
          {"gamma", m.gamma},
          {"direction_scheme", m.direction_scheme},
          {"offset_angle", m.offset_angle},
          {"seeds", m.seeds},
          {"class_names", m.class_names}};
}

DatasetMeta json_meta(const json& j) {
  DatasetMeta m;
  m.dims = j.at("dims").get<int>();
  m.m = j.at("m").get<int>();
  m.r = j.at("r").get<int>();
  m.gamma = j.at("gamma").get<std::string>();
  m.direction_scheme = j.at("direction_scheme").get<std::string>();
  m.offset_angle = j.at("offset_angle").get<double>();
  m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  m.class_names = j.at("class_names").get<std::vector<std::string>>();
  return m;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

[[noreturn]] void fail_at(Errc code, std::size_t line, const std::string& what) {
  throw Error(code, "line " + std::to_string(line) + ": " + what);
}

void check_record(const DatasetMeta& meta, const FingerprintRecord& rec, std::size_t line) {
  if (rec.m != meta.m || rec.fingerprint.size() != meta.m) {
    fail_at(Errc::schema_error, line, "record has M = " + std::to_string(rec.fingerprint.size()) +
                                          ", dataset has M = " + std::to_string(meta.m));
  }
  if (rec.r != meta.r) fail_at(Errc::schema_error, line, "record ray length differs from dataset");
  if (rec.center.size() != meta.dims) fail_at(Errc::schema_error, line, "record center has the wrong dimension");
  if (rec.label < 0 || rec.label >= static_cast<int>(meta.class_names.size())) {
    fail_at(Errc::schema_error, line, "label " + std::to_string(rec.label) + " is not in the taxonomy");
  }
}

std::string to_jsonl(const Dataset& d) {
  std::string out = json{{"meta", meta_json(d.meta)}}.dump() + "\n";
  for (const auto& rec : d.records) {
    // Keys in the documented record order.
    out += "{\"scene_id\":" + json(rec.scene_id).dump() + ",\"center\":" + json(to_std(rec.center)).dump() +
           ",\"m\":" + std::to_string(rec.m) + ",\"r\":" + std::to_string(rec.r) +
           ",\"fp\":" + json(to_std(rec.fingerprint)).dump() + ",\"label\":" + std::to_string(rec.label) +
           ",\"trunc\":" + (rec.truncated ? "true" : "false") + "}\n";
  }
  return out;
}

Dataset from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  Dataset d;
  bool have_meta = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail_at(Errc::parse_error, line_no, e.what());
    }
    try {
      if (!have_meta) {
        d.meta = json_meta(j.at("meta"));
        have_meta = true;
        continue;
      }
      FingerprintRecord rec;
      rec.scene_id = j.at("scene_id").get<std::string>();
      rec.center = from_std(j.at("center").get<std::vector<double>>());
      rec.m = j.at("m").get<int>();
      rec.r = j.at("r").get<int>();
      rec.fingerprint = from_std(j.at("fp").get<std::vector<double>>());
      rec.label = j.at("label").get<int>();
      rec.truncated = j.at("trunc").get<bool>();
      check_record(d.meta, rec, line_no);
      d.records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      fail_at(Errc::schema_error, line_no, e.what());
    }
  }
  if (!have_meta) throw Error(Errc::parse_error, "dataset has no metadata line");
  return d;
}

constexpr const char* kCsvMetaPrefix = "# meta ";

std::string csv_header(const DatasetMeta& meta) {
  std::string h = "scene_id";
  for (int i = 1; i <= meta.dims; ++i) h += ",c_" + std::to_string(i);
  h += ",label";
  for (int i = 1; i <= meta.m; ++i) h += ",w_" + std::to_string(i);
  h += ",truncated";
  return h;
}

std::string to_csv(const Dataset& d) {
  std::string out = kCsvMetaPrefix + meta_json(d.meta).dump() + "\n" + csv_header(d.meta) + "\n";
  for (const auto& rec : d.records) {
    if (rec.scene_id.find_first_of(",\"\n\r") != std::string::npos) {
      throw Error(Errc::invalid_parameter, "scene id '" + rec.scene_id + "' cannot be written to CSV");
    }
    out += rec.scene_id;
    for (double c : to_std(rec.center)) out += "," + format_double(c);
    out += "," + std::to_string(rec.label);
    for (double w : to_std(rec.fingerprint)) out += "," + format_double(w);
    out += rec.truncated ? ",1\n" : ",0\n";
  }
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

Dataset from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  Dataset d;

  if (!std::getline(in, line) || line.rfind(kCsvMetaPrefix, 0) != 0) {
    throw Error(Errc::parse_error, "line 1: expected '# meta {...}'");
  }
  ++line_no;
  try {
    d.meta = json_meta(json::parse(line.substr(std::string(kCsvMetaPrefix).size())));
  } catch (const json::exception& e) {
    fail_at(Errc::parse_error, line_no, e.what());
  }
  if (!std::getline(in, line)) fail_at(Errc::parse_error, 2, "missing header row");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header(d.meta)) fail_at(Errc::schema_error, line_no, "header does not match metadata");

  const std::size_t arity = 1 + static_cast<std::size_t>(d.meta.dims) + 1 + static_cast<std::size_t>(d.meta.m) + 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != arity) {
      fail_at(Errc::schema_error, line_no, "row has " + std::to_string(fields.size()) + " fields, expected " +
                                               std::to_string(arity));
    }
    FingerprintRecord rec;
    rec.scene_id = fields[0];
    rec.m = d.meta.m;
    rec.r = d.meta.r;
    rec.center.resize(d.meta.dims);
    rec.fingerprint.resize(d.meta.m);
    std::size_t f = 1;
    auto number = [&](double& out) {
      if (!parse_double(fields[f], out)) fail_at(Errc::parse_error, line_no, "bad number '" + fields[f] + "'");
      ++f;
    };
    for (int i = 0; i < d.meta.dims; ++i) number(rec.center[i]);
    double label = 0.0;
    number(label);
    if (label != std::floor(label)) fail_at(Errc::parse_error, line_no, "label must be an integer");
    rec.label = static_cast<int>(label);
    for (int i = 0; i < d.meta.m; ++i) number(rec.fingerprint[i]);
    if (fields[f] != "0" && fields[f] != "1") fail_at(Errc::parse_error, line_no, "truncated must be 0 or 1");
    rec.truncated = fields[f] == "1";
    check_record(d.meta, rec, line_no);
    d.records.push_back(std::move(rec));
  }
  return d;
}

}  // namespace

bool operator==(const FingerprintRecord& a, const FingerprintRecord& b) {
  return a.scene_id == b.scene_id && same_vector(a.center, b.center) && a.m == b.m && a.r == b.r &&
         same_vector(a.fingerprint, b.fingerprint) && a.label == b.label && a.truncated == b.truncated;
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < records.size(); ++i) check_record(meta, records[i], i + 1);
}

std::vector<Point> grid_points(const Box& extent, int per_axis) {
  const int n = extent.dims();
  if (per_axis < 2) throw Error(Errc::invalid_count, "grid needs at least 2 points per axis");
  if (n < 1 || extent.hi.size() != n || !((extent.hi.array() > extent.lo.array()).all())) {
    throw Error(Errc::invalid_parameter, "grid extent is degenerate");
  }
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(per_axis);

  std::vector<Point> out;
  out.reserve(total);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  const Eigen::VectorXd step = (extent.hi - extent.lo) / static_cast<double>(per_axis - 1);
  for (std::size_t k = 0; k < total; ++k) {
    Point p(n);
    for (int i = 0; i < n; ++i) {
      // Pin the last lattice line to hi exactly.
      p[i] = idx[i] == per_axis - 1 ? extent.hi[i] : extent.lo[i] + idx[i] * step[i];
    }
    out.push_back(std::move(p));
    for (int i = n - 1; i >= 0; --i) {
      if (++idx[i] < per_axis) break;
      idx[i] = 0;
    }
  }
  return out;
}

Dataset build_dataset(const std::vector<Scene>& scenes, const DirectionSet& dirs, int r,
                      const WeightFunction& gamma, int per_axis) {
  if (scenes.empty()) throw Error(Errc::empty_dataset, "no scenes to fingerprint");
  if (r < 1) throw Error(Errc::invalid_length, "ray length must be >= 1 px");
  const Scene& first = scenes.front();
  Dataset d;
  d.meta.dims = first.dims();
  d.meta.m = dirs.count();
  d.meta.r = r;
  d.meta.gamma = gamma.describe();
  d.meta.direction_scheme = to_string(dirs.scheme());
  d.meta.offset_angle = dirs.offset_angle();
  for (const auto& c : first.taxonomy()) d.meta.class_names.push_back(c.name);
  if (dirs.dims() != d.meta.dims) throw Error(Errc::shape_error, "direction set and scenes differ in dimension");

  for (const auto& scene : scenes) {
    if (scene.dims() != first.dims() || scene.taxonomy() != first.taxonomy()) {
      throw Error(Errc::schema_error, "scene " + scene.id() + " differs in dimension or taxonomy");
    }
    d.meta.seeds.push_back(scene.seed());
    for (const auto& center : grid_points(scene.extent(), per_axis)) {
      const Fingerprint fp = fingerprint_point(scene, center, dirs, r, gamma);
      FingerprintRecord rec;
      rec.scene_id = scene.id();
      rec.center = center;
      rec.m = dirs.count();
      rec.r = r;
      rec.fingerprint = fp.weights;
      rec.label = scene.label_at(center).label.id;
      rec.truncated = fp.truncated;
      d.records.push_back(std::move(rec));
    }
  }
  return d;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec) {
  if (dataset.empty()) throw Error(Errc::empty_dataset, "cannot split an empty dataset");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(Errc::invalid_parameter, "train fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(order));

  // The small guard keeps e.g. 0.8 * 27380 from flooring to 21903.
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(dataset.size()) + 1e-9));
  std::pair<Dataset, Dataset> out{Dataset{dataset.meta, {}}, Dataset{dataset.meta, {}}};
  out.first.records.reserve(n_train);
  out.second.records.reserve(dataset.size() - n_train);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? out.first : out.second).records.push_back(dataset.records[order[i]]);
  }
  return out;
}

LabeledData<double> to_labeled(const Dataset& dataset) {
  LabeledData<double> data;
  data.inputs.resize(dataset.meta.m, static_cast<Eigen::Index>(dataset.size()));
  data.labels.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& rec = dataset.records[i];
    if (rec.fingerprint.size() != dataset.meta.m) throw Error(Errc::schema_error, "record fingerprint length differs from M");
    data.inputs.col(static_cast<Eigen::Index>(i)) = rec.fingerprint;
    data.labels.push_back(rec.label);
  }
  return data;
}

DatasetFormat format_for_path(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot != std::string::npos && path.substr(dot) == ".csv") return DatasetFormat::csv;
  return DatasetFormat::jsonl;
}

std::string dataset_to_string(const Dataset& dataset, DatasetFormat format) {
  return format == DatasetFormat::csv ? to_csv(dataset) : to_jsonl(dataset);
}

Dataset dataset_from_string(const std::string& text, DatasetFormat format) {
  return format == DatasetFormat::csv ? from_csv(text) : from_jsonl(text);
}

void write_dataset(const std::string& path, const Dataset& dataset, DatasetFormat format) {
  const std::string text = dataset_to_string(dataset, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error(Errc::io_error, "failed writing " + path);
}

Dataset read_dataset(const std::string& path, DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return dataset_from_string(buf.str(), format);
}

}  // namespace rayfp
