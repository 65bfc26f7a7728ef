#include "bandsel/config.hpp"

#include <fstream>
#include <set>

namespace bandsel::config {

using nlohmann::json;

void RunConfig::validate() const {
  if (composite.components < 1) throw InvalidArgument("config: composite.components must be >= 1");
  if (composite.nir == composite.red) throw InvalidArgument("config: composite.nir equals red");
  if (slic.k < 0 || !(slic.px_per_segment > 0.0)) throw InvalidArgument("config: bad slic sizing");
  slic::SlicConfig{std::max(slic.k, 1), slic.m, slic.max_iter, slic.min_region_frac}.validate();
  if (!(segments.min_hor >= 0.5 && segments.min_hor <= 1.0)) {
    throw InvalidArgument("config: segments.min_hor must lie in [0.5, 1]");
  }
  if (texture.levels < 2) throw InvalidArgument("config: texture.levels must be >= 2");
  if (!(svm.lambda > 0.0) || svm.epochs < 1) throw InvalidArgument("config: bad svm settings");
  if (umda.parents < 1 || umda.parents > umda.population || umda.generations < 1) {
    throw InvalidArgument("config: bad umda population settings");
  }
  if (umda.seeds.empty()) throw InvalidArgument("config: umda.seeds is empty");
  if (umda.top_k == 0) throw InvalidArgument("config: umda.top_k must be positive");
  split.validate();
  std::set<std::string> names;
  for (const auto& c : compositions) {
    if (c.name.empty() || c.channels.empty()) throw InvalidArgument("config: empty composition");
    if (!names.insert(c.name).second) throw InvalidArgument("config: duplicate composition " + c.name);
  }
}

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InvalidArgument("config: " + where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw InvalidArgument("config: unknown key '" + where + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig from_json(const json& j) {
  RunConfig cfg;
  try {
    check_keys(j, "", {"version", "paths", "composite", "slic", "segments", "texture", "svm", "umda",
                       "split", "compositions"});
    if (!j.contains("version") || j.at("version").get<int>() != kSchemaVersion) {
      throw InvalidArgument("config: version must be " + std::to_string(kSchemaVersion));
    }
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      check_keys(p, "paths.", {"corpus", "output"});
      read(p, "corpus", cfg.paths.corpus);
      read(p, "output", cfg.paths.output);
    }
    if (j.contains("composite")) {
      const auto& c = j.at("composite");
      check_keys(c, "composite.", {"components", "nir", "red"});
      read(c, "components", cfg.composite.components);
      read(c, "nir", cfg.composite.nir);
      read(c, "red", cfg.composite.red);
    }
    if (j.contains("slic")) {
      const auto& s = j.at("slic");
      check_keys(s, "slic.", {"k", "px_per_segment", "m", "max_iter", "min_region_frac"});
      read(s, "k", cfg.slic.k);
      read(s, "px_per_segment", cfg.slic.px_per_segment);
      read(s, "m", cfg.slic.m);
      read(s, "max_iter", cfg.slic.max_iter);
      read(s, "min_region_frac", cfg.slic.min_region_frac);
    }
    if (j.contains("segments")) {
      const auto& s = j.at("segments");
      check_keys(s, "segments.", {"min_hor", "min_area"});
      read(s, "min_hor", cfg.segments.min_hor);
      read(s, "min_area", cfg.segments.min_area);
    }
    if (j.contains("texture")) {
      const auto& t = j.at("texture");
      check_keys(t, "texture.", {"levels", "direction_mean"});
      read(t, "levels", cfg.texture.levels);
      read(t, "direction_mean", cfg.texture.direction_mean);
    }
    if (j.contains("svm")) {
      const auto& s = j.at("svm");
      check_keys(s, "svm.", {"lambda", "epochs", "seed", "class_weighting"});
      read(s, "lambda", cfg.svm.lambda);
      read(s, "epochs", cfg.svm.epochs);
      read(s, "seed", cfg.svm.seed);
      read(s, "class_weighting", cfg.svm.class_weighting);
    }
    if (j.contains("umda")) {
      const auto& u = j.at("umda");
      check_keys(u, "umda.", {"population", "parents", "generations", "margins", "seeds", "top_k"});
      read(u, "population", cfg.umda.population);
      read(u, "parents", cfg.umda.parents);
      read(u, "generations", cfg.umda.generations);
      read(u, "margins", cfg.umda.margins);
      read(u, "seeds", cfg.umda.seeds);
      read(u, "top_k", cfg.umda.top_k);
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      check_keys(s, "split.", {"train", "validation", "test"});
      read(s, "train", cfg.split.train);
      read(s, "validation", cfg.split.validation);
      read(s, "test", cfg.split.test);
    }
    if (j.contains("compositions")) {
      cfg.compositions.clear();
      for (const auto& c : j.at("compositions")) {
        check_keys(c, "compositions[].", {"name", "channels"});
        cfg.compositions.push_back(
            {c.at("name").get<std::string>(), c.at("channels").get<std::vector<std::string>>()});
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json comps = json::array();
  for (const auto& c : cfg.compositions) comps.push_back({{"name", c.name}, {"channels", c.channels}});
  return {
      {"version", kSchemaVersion},
      {"paths", {{"corpus", cfg.paths.corpus}, {"output", cfg.paths.output}}},
      {"composite",
       {{"components", cfg.composite.components}, {"nir", cfg.composite.nir}, {"red", cfg.composite.red}}},
      {"slic",
       {{"k", cfg.slic.k},
        {"px_per_segment", cfg.slic.px_per_segment},
        {"m", cfg.slic.m},
        {"max_iter", cfg.slic.max_iter},
        {"min_region_frac", cfg.slic.min_region_frac}}},
      {"segments", {{"min_hor", cfg.segments.min_hor}, {"min_area", cfg.segments.min_area}}},
      {"texture", {{"levels", cfg.texture.levels}, {"direction_mean", cfg.texture.direction_mean}}},
      {"svm",
       {{"lambda", cfg.svm.lambda},
        {"epochs", cfg.svm.epochs},
        {"seed", cfg.svm.seed},
        {"class_weighting", cfg.svm.class_weighting}}},
      {"umda",
       {{"population", cfg.umda.population},
        {"parents", cfg.umda.parents},
        {"generations", cfg.umda.generations},
        {"margins", cfg.umda.margins},
        {"seeds", cfg.umda.seeds},
        {"top_k", cfg.umda.top_k}}},
      {"split", {{"train", cfg.split.train}, {"validation", cfg.split.validation}, {"test", cfg.split.test}}},
      {"compositions", comps}};
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
  return from_json(j);
}

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::composite: return "composite";
    case Stage::superpixels: return "superpixels";
    case Stage::segments: return "segments";
    case Stage::features: return "features";
    case Stage::selection: return "selection";
    case Stage::ranking: return "ranking";
    case Stage::evaluation: return "evaluation";
    case Stage::report: return "report";
  }
  return "unknown";
}

std::string stage_hash(const RunConfig& cfg, Stage s) {
  const json full = to_json(cfg);
  json sections = json::object();
  sections["version"] = full["version"];
  sections["composite"] = full["composite"];
  if (s >= Stage::superpixels) sections["slic"] = full["slic"];
  if (s >= Stage::segments) sections["segments"] = full["segments"];
  if (s >= Stage::features) sections["texture"] = full["texture"];
  if (s >= Stage::selection) {
    sections["svm"] = full["svm"];
    sections["split"] = full["split"];
    json umda = full["umda"];
    umda.erase("top_k");
    sections["umda"] = umda;
  }
  if (s == Stage::ranking || s == Stage::report) sections["top_k"] = full["umda"]["top_k"];
  if (s == Stage::evaluation || s == Stage::report) sections["compositions"] = full["compositions"];
  sections["stage"] = stage_name(s);
  return fnv1a_hex(sections.dump());
}

}  // namespace bandsel::config
