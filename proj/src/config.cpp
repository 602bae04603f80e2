#include "hcmu/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "hcmu/errors.hpp"
#include "hcmu/hash.hpp"

namespace hcmu {

using nlohmann::json;

std::vector<double> GridSpec::values() const {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = min;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    // Symmetric form keeps grids centred on 0 exactly symmetric.
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    v[i] = (1.0 - t) * min + t * max;
  }
  return v;
}

const char* to_string(MeshFormat f) {
  switch (f) {
    case MeshFormat::OBJ: return "obj";
    case MeshFormat::PLY: return "ply";
    case MeshFormat::CSV4D: return "csv4d";
  }
  return "unknown";
}

const char* to_string(Projection p) {
  return p == Projection::Stereographic ? "stereographic" : "none";
}

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::ConfigError, "config key '" + key + "': " + what);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* s) { return k == s; })) {
      bad(where.empty() ? k : where + "." + k, "unknown key");
    }
  }
}

double number(const json& j, const std::string& key) {
  if (!j.is_number()) bad(key, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(key, "must be finite");
  return v;
}

std::size_t count(const json& j, const std::string& key) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    bad(key, "expected a non-negative integer");
  }
  return j.get<std::size_t>();
}

std::string text(const json& j, const std::string& key, std::initializer_list<const char*> allowed) {
  if (!j.is_string()) bad(key, "expected a string");
  const std::string s = j.get<std::string>();
  if (allowed.size() != 0 &&
      std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return s == a; })) {
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    bad(key, "'" + s + "' is not one of " + list);
  }
  return s;
}

GridSpec grid(const json& j, const std::string& key) {
  only_keys(j, key, {"min", "max", "n"});
  GridSpec g;
  if (!j.contains("min") || !j.contains("max") || !j.contains("n")) bad(key, "needs min, max, n");
  g.min = number(j["min"], key + ".min");
  g.max = number(j["max"], key + ".max");
  g.n = count(j["n"], key + ".n");
  return g;
}

std::optional<double> optional_number(const json& j, const std::string& key) {
  if (j.is_null()) return std::nullopt;
  return number(j, key);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

RunConfig config_from_json(const json& j) {
  only_keys(j, "",
            {"k1", "k2", "c", "A", "branch", "s", "closed_form_sign", "K0", "H0", "margin",
             "tolerances", "on_event", "pairing", "x_grid", "y_grid", "k_samples", "mesh",
             "outputs", "seed", "identity_samples", "negative_controls"});
  RunConfig c;
  if (j.contains("k1")) c.k1 = number(j["k1"], "k1");
  if (j.contains("k2")) c.k2 = number(j["k2"], "k2");
  if (j.contains("c")) c.c = number(j["c"], "c");
  if (j.contains("A")) c.A = number(j["A"], "A");
  if (j.contains("branch")) c.branch = text(j["branch"], "branch", {"plus", "minus", "auto"});
  if (j.contains("s")) c.s = optional_number(j["s"], "s");
  if (j.contains("closed_form_sign")) {
    c.closed_form_sign = text(j["closed_form_sign"], "closed_form_sign", {"upper", "lower"});
  }
  if (j.contains("K0")) c.K0 = optional_number(j["K0"], "K0");
  if (j.contains("H0")) c.H0 = optional_number(j["H0"], "H0");
  if (j.contains("margin")) c.margin = number(j["margin"], "margin");
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    only_keys(t, "tolerances", {"rel", "abs", "max_step"});
    if (t.contains("rel")) c.rel_tol = number(t["rel"], "tolerances.rel");
    if (t.contains("abs")) c.abs_tol = number(t["abs"], "tolerances.abs");
    if (t.contains("max_step")) c.max_step = number(t["max_step"], "tolerances.max_step");
  }
  if (j.contains("on_event")) c.on_event = text(j["on_event"], "on_event", {"stop", "switch"});
  if (j.contains("pairing")) {
    c.pairing = text(j["pairing"], "pairing", {"plus_negative_cos", "plus_positive_cos", "auto"});
  }
  if (j.contains("x_grid")) c.x_grid = grid(j["x_grid"], "x_grid");
  if (j.contains("y_grid")) c.y_grid = grid(j["y_grid"], "y_grid");
  if (j.contains("k_samples")) c.k_samples = count(j["k_samples"], "k_samples");
  if (j.contains("mesh")) {
    const json& m = j["mesh"];
    only_keys(m, "mesh", {"format", "projection"});
    if (m.contains("format")) {
      const std::string f = text(m["format"], "mesh.format", {"obj", "ply", "csv4d"});
      c.mesh_format = f == "obj" ? MeshFormat::OBJ : f == "ply" ? MeshFormat::PLY : MeshFormat::CSV4D;
    }
    if (m.contains("projection")) {
      c.projection = text(m["projection"], "mesh.projection", {"none", "stereographic"}) ==
                             "stereographic"
                         ? Projection::Stereographic
                         : Projection::None;
    }
  }
  if (j.contains("outputs")) {
    const json& o = j["outputs"];
    only_keys(o, "outputs", {"dir", "csv", "forms", "mesh", "report"});
    if (o.contains("dir")) c.outputs.dir = text(o["dir"], "outputs.dir", {});
    if (o.contains("csv")) c.outputs.csv = text(o["csv"], "outputs.csv", {});
    if (o.contains("forms")) c.outputs.forms = text(o["forms"], "outputs.forms", {});
    if (o.contains("mesh")) c.outputs.mesh = text(o["mesh"], "outputs.mesh", {});
    if (o.contains("report")) c.outputs.report = text(o["report"], "outputs.report", {});
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) bad("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("identity_samples")) {
    c.identity_samples = count(j["identity_samples"], "identity_samples");
  }
  if (j.contains("negative_controls")) {
    if (!j["negative_controls"].is_boolean()) bad("negative_controls", "expected a boolean");
    c.negative_controls = j["negative_controls"].get<bool>();
  }
  check_config(c);
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["k1"] = c.k1;
  j["k2"] = c.k2;
  j["c"] = c.c;
  j["A"] = c.A;
  j["branch"] = c.branch;
  j["s"] = optional_json(c.s);
  j["closed_form_sign"] = c.closed_form_sign;
  j["K0"] = optional_json(c.K0);
  j["H0"] = optional_json(c.H0);
  j["margin"] = c.margin;
  j["tolerances"] = {{"rel", c.rel_tol}, {"abs", c.abs_tol}, {"max_step", c.max_step}};
  j["on_event"] = c.on_event;
  j["pairing"] = c.pairing;
  j["x_grid"] = {{"min", c.x_grid.min}, {"max", c.x_grid.max}, {"n", c.x_grid.n}};
  j["y_grid"] = {{"min", c.y_grid.min}, {"max", c.y_grid.max}, {"n", c.y_grid.n}};
  j["k_samples"] = c.k_samples;
  j["mesh"] = {{"format", to_string(c.mesh_format)}, {"projection", to_string(c.projection)}};
  j["outputs"] = {{"dir", c.outputs.dir},   {"csv", c.outputs.csv},
                  {"forms", c.outputs.forms}, {"mesh", c.outputs.mesh},
                  {"report", c.outputs.report}};
  j["seed"] = c.seed;
  j["identity_samples"] = c.identity_samples;
  j["negative_controls"] = c.negative_controls;
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, "config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void check_config(const RunConfig& c) {
  auto check_grid = [](const GridSpec& g, const char* key) {
    if (g.n < 1) bad(key, "n must be at least 1");
    if (g.n > 1 && !(g.max > g.min)) bad(key, "max must exceed min");
    if (g.n > 1000000) bad(key, "n is unreasonably large");
  };
  check_grid(c.x_grid, "x_grid");
  check_grid(c.y_grid, "y_grid");
  if (!(c.margin > 0.0 && c.margin < 0.5)) bad("margin", "must lie in (0, 0.5)");
  if (!(c.rel_tol > 0.0)) bad("tolerances.rel", "must be positive");
  if (!(c.abs_tol > 0.0)) bad("tolerances.abs", "must be positive");
  if (!(c.max_step >= 0.0)) bad("tolerances.max_step", "must be non-negative");
  if (c.k_samples < 2) bad("k_samples", "must be at least 2");
  if (!c.s && !c.H0) bad("H0", "either s (closed-form start) or H0 is required");
  if (c.H0 && c.branch == "auto") bad("branch", "an explicit H0 needs branch plus or minus");
}

std::string config_hash(const RunConfig& c) {
  json j = config_to_json(c);
  j.erase("outputs");
  return hex64(fnv1a(j.dump()));
}

}  // namespace hcmu
