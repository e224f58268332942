#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rayfp/scene.hpp"

namespace rayfp {

using nlohmann::json;

namespace {

json vec_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd json_vec(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json params_json(const SceneParams& p) {
  return {{"line_spacing_px", p.line_spacing_px},
          {"spacing_jitter_frac", p.spacing_jitter_frac},
          {"slope_L", p.slope_L},
          {"slope_C", p.slope_C},
          {"slope_R", p.slope_R},
          {"center_band_halfwidth_px", p.center_band_halfwidth_px},
          {"extent_px", p.extent_px},
          {"first_line_frac", p.first_line_frac},
          {"first_plane_frac", p.first_plane_frac},
          {"plane_tilt", p.plane_tilt},
          {"taxonomy_3d", p.taxonomy_3d == TripleDotTaxonomy::collapsed ? "collapsed" : "resolved"}};
}

SceneParams json_params(const json& j) {
  SceneParams p;
  p.line_spacing_px = j.at("line_spacing_px").get<double>();
  p.spacing_jitter_frac = j.at("spacing_jitter_frac").get<double>();
  p.slope_L = j.at("slope_L").get<double>();
  p.slope_C = j.at("slope_C").get<double>();
  p.slope_R = j.at("slope_R").get<double>();
  p.center_band_halfwidth_px = j.at("center_band_halfwidth_px").get<double>();
  p.extent_px = j.at("extent_px").get<int>();
  p.first_line_frac = j.at("first_line_frac").get<double>();
  p.first_plane_frac = j.at("first_plane_frac").get<double>();
  p.plane_tilt = j.at("plane_tilt").get<double>();
  const auto tax = j.at("taxonomy_3d").get<std::string>();
  if (tax != "collapsed" && tax != "resolved") throw Error(Errc::parse_error, "unknown taxonomy_3d '" + tax + "'");
  p.taxonomy_3d = tax == "collapsed" ? TripleDotTaxonomy::collapsed : TripleDotTaxonomy::resolved;
  return p;
}

json scene_json(const Scene& s) {
  json families = json::array();
  json planes = json::array();
  for (const auto& fam : s.families()) {
    families.push_back({{"name", fam.name}, {"normal", vec_json(fam.normal)}});
    for (double o : fam.offsets) planes.push_back({{"family", fam.name}, {"normal", vec_json(fam.normal)}, {"offset", o}});
  }
  json halfspaces = json::array();
  for (const auto& h : s.polytope()) halfspaces.push_back({{"normal", vec_json(h.normal)}, {"offset", h.offset}});
  json doc = {{"id", s.id()},
              {"kind", to_string(s.kind())},
              {"dims", s.dims()},
              {"extent", {{"lo", vec_json(s.extent().lo)}, {"hi", vec_json(s.extent().hi)}}},
              {"params", params_json(s.params())},
              {"seed", s.seed()},
              {"families", families},
              {"planes", planes},
              {"halfspaces", halfspaces},
              {"band", nullptr}};
  if (s.band()) {
    doc["band"] = {{"normal", vec_json(s.band()->normal)},
                   {"center", s.band()->center},
                   {"halfwidth", s.band()->halfwidth}};
  }
  return doc;
}

Scene json_scene(const json& j) {
  const SceneKind kind = scene_kind_from_string(j.at("kind").get<std::string>());
  Box extent{json_vec(j.at("extent").at("lo")), json_vec(j.at("extent").at("hi"))};
  if (j.at("dims").get<int>() != extent.dims()) throw Error(Errc::schema_error, "scene dims disagree with extent");

  std::vector<HyperplaneFamily> families;
  for (const auto& f : j.at("families")) families.push_back({f.at("name").get<std::string>(), json_vec(f.at("normal")), {}});
  for (const auto& p : j.at("planes")) {
    const auto name = p.at("family").get<std::string>();
    auto it = std::find_if(families.begin(), families.end(), [&](const auto& f) { return f.name == name; });
    if (it == families.end()) throw Error(Errc::schema_error, "plane refers to unknown family " + name);
    const Eigen::VectorXd normal = json_vec(p.at("normal"));
    if (it->normal.size() != normal.size() || !(it->normal.array() == normal.array()).all()) {
      throw Error(Errc::schema_error, "plane normal differs from family " + name);
    }
    it->offsets.push_back(p.at("offset").get<double>());
  }
  std::vector<Halfspace> halfspaces;
  for (const auto& h : j.at("halfspaces")) halfspaces.push_back({json_vec(h.at("normal")), h.at("offset").get<double>()});
  std::optional<Band> band;
  if (!j.at("band").is_null()) {
    const auto& b = j.at("band");
    band = Band{json_vec(b.at("normal")), b.at("center").get<double>(), b.at("halfwidth").get<double>()};
  }
  return Scene(kind, j.at("id").get<std::string>(), std::move(extent), json_params(j.at("params")),
               j.at("seed").get<std::uint64_t>(), std::move(families), std::move(band), std::move(halfspaces));
}

}  // namespace

std::string scenes_to_json(const std::vector<Scene>& scenes) {
  json arr = json::array();
  for (const auto& s : scenes) arr.push_back(scene_json(s));
  return json{{"scenes", arr}}.dump(1) + "\n";
}

std::vector<Scene> scenes_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    std::vector<Scene> out;
    for (const auto& s : doc.at("scenes")) out.push_back(json_scene(s));
    return out;
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("scene file: ") + e.what());
  }
}

void write_scenes(const std::string& path, const std::vector<Scene>& scenes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot open " + path + " for writing");
  out << scenes_to_json(scenes);
  if (!out) throw Error(Errc::io_error, "failed writing " + path);
}

std::vector<Scene> read_scenes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenes_from_json(buf.str());
}

}  // namespace rayfp
