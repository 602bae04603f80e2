#include "hcmu/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "hcmu/errors.hpp"
#include "hcmu/hcmu_core.hpp"
#include "hcmu/io.hpp"
#include "hcmu/pipeline.hpp"
#include "hcmu/verify.hpp"

namespace hcmu::cli {

using nlohmann::json;

namespace {

struct Failure {
  int code;
  std::string kind;
  std::string message;
};

int code_for(ErrorKind kind, int stage_default) {
  switch (kind) {
    case ErrorKind::IoError:
    case ErrorKind::FormatError: return kExitIo;
    case ErrorKind::ConfigError:
    case ErrorKind::RejectedParams: return kExitConfig;
    default: return stage_default;
  }
}

/// Runs `f`, converting library errors into a Failure with the stage's
/// default exit code.
template <class F>
decltype(auto) stage(int code, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Failure{code_for(e.kind(), code), std::string(to_string(e.kind())), e.what()};
  }
}

struct Options {
  std::string config;
  std::string out;
  std::optional<double> k1, k2, c, A, s, K0, H0;
  std::optional<std::string> branch, on_event, pairing, format, projection;
  std::optional<double> x_min, x_max, y_min, y_max;
  std::optional<std::size_t> nx, ny;
  std::optional<std::uint64_t> seed;
  bool no_negative_controls = false;
};

void add_run_options(CLI::App* app, Options& o) {
  app->add_option("--config", o.config, "JSON run configuration");
  app->add_option("--out", o.out, "output directory (default $HCMU_OUT_DIR or .)");
  app->add_option("--k1", o.k1, "maximum curvature K1");
  app->add_option("--k2", o.k2, "minimum curvature K2");
  app->add_option("--c", o.c, "space form curvature");
  app->add_option("--A", o.A, "Weingarten constant A");
  app->add_option("--s", o.s, "closed-form constant s");
  app->add_option("--K0", o.K0, "initial curvature");
  app->add_option("--H0", o.H0, "initial mean curvature");
  app->add_option("--branch", o.branch, "plus | minus | auto")
      ->check(CLI::IsMember({"plus", "minus", "auto"}));
  app->add_option("--on-event", o.on_event, "stop | switch")->check(CLI::IsMember({"stop", "switch"}));
  app->add_option("--pairing", o.pairing, "theta pairing")
      ->check(CLI::IsMember({"plus_negative_cos", "plus_positive_cos", "auto"}));
  app->add_option("--x-min", o.x_min);
  app->add_option("--x-max", o.x_max);
  app->add_option("--nx", o.nx);
  app->add_option("--y-min", o.y_min);
  app->add_option("--y-max", o.y_max);
  app->add_option("--ny", o.ny);
  app->add_option("--format", o.format, "mesh format")->check(CLI::IsMember({"obj", "ply", "csv4d"}));
  app->add_option("--project", o.projection, "none | stereographic")
      ->check(CLI::IsMember({"none", "stereographic"}));
  app->add_option("--seed", o.seed, "seed for randomized checks");
  app->add_flag("--no-negative-controls", o.no_negative_controls);
}

RunConfig resolve(const Options& o) {
  return stage(kExitConfig, [&] {
    RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
    if (o.k1) c.k1 = *o.k1;
    if (o.k2) c.k2 = *o.k2;
    if (o.c) c.c = *o.c;
    if (o.A) c.A = *o.A;
    if (o.s) c.s = *o.s;
    if (o.K0) c.K0 = *o.K0;
    if (o.H0) c.H0 = *o.H0;
    if (o.branch) c.branch = *o.branch;
    if (o.on_event) c.on_event = *o.on_event;
    if (o.pairing) c.pairing = *o.pairing;
    if (o.x_min) c.x_grid.min = *o.x_min;
    if (o.x_max) c.x_grid.max = *o.x_max;
    if (o.nx) c.x_grid.n = *o.nx;
    if (o.y_min) c.y_grid.min = *o.y_min;
    if (o.y_max) c.y_grid.max = *o.y_max;
    if (o.ny) c.y_grid.n = *o.ny;
    if (o.format) {
      c.mesh_format = *o.format == "obj"   ? MeshFormat::OBJ
                      : *o.format == "ply" ? MeshFormat::PLY
                                           : MeshFormat::CSV4D;
    }
    if (o.projection) {
      c.projection = *o.projection == "stereographic" ? Projection::Stereographic : Projection::None;
    }
    if (o.seed) c.seed = *o.seed;
    if (o.no_negative_controls) c.negative_controls = false;
    if (!o.out.empty()) c.outputs.dir = o.out;
    if (c.outputs.dir.empty()) {
      const char* env = std::getenv("HCMU_OUT_DIR");
      c.outputs.dir = env && *env ? env : ".";
    }
    check_config(c);
    return c;
  });
}

std::string out_path(const RunConfig& c, const std::string& name) {
  const std::filesystem::path p(name);
  if (p.is_absolute()) return name;
  return (std::filesystem::path(c.outputs.dir) / p).string();
}

std::string mesh_name(const RunConfig& c) {
  if (c.outputs.mesh != OutputPaths{}.mesh) return c.outputs.mesh;
  switch (c.mesh_format) {
    case MeshFormat::OBJ: return "surface.obj";
    case MeshFormat::PLY: return "surface.ply";
    case MeshFormat::CSV4D: return "surface.csv";
  }
  return c.outputs.mesh;
}

std::unique_ptr<Pipeline> prepare(const RunConfig& cfg) {
  auto p = stage(kExitConfig, [&] { return std::make_unique<Pipeline>(cfg); });
  stage(kExitNumerical, [&] { p->solve(); });
  return p;
}

json header(const Pipeline& p, const char* command) {
  return {{"command", command},
          {"artifact_version", p.meta().version},
          {"config_hash", p.meta().config_hash}};
}

json events_json(const HSolution& sol) {
  json ev = json::array();
  for (const SolveEvent& e : sol.events()) ev.push_back({{"K", e.K}, {"kind", to_string(e.kind)}});
  return ev;
}

json run_solve_h(const Pipeline& p) {
  const std::string path = out_path(p.config(), p.config().outputs.csv);
  std::ostringstream buf;
  stage(kExitNumerical, [&] { write_h_table(buf, p.solution(), p.K_samples(), p.meta()); });
  stage(kExitIo, [&] { write_text(path, buf.str()); });
  json j = header(p, "solve-h");
  j["K_min"] = p.solution().K_min();
  j["K_max"] = p.solution().K_max();
  j["branch"] = to_string(p.solver_config().branch);
  j["H0"] = p.solver_config().H0;
  j["events"] = events_json(p.solution());
  j["outputs"] = {{"csv", path}};
  return j;
}

json run_forms(const Pipeline& p) {
  const std::string path = out_path(p.config(), p.config().outputs.forms);
  FormsGrid grid = stage(kExitNumerical, [&] { return p.forms(); });
  grid.A = p.config().A;
  stage(kExitIo, [&] { write_forms(path, grid, p.meta()); });
  json j = header(p, "forms");
  j["rows"] = grid.samples.size();
  j["pairing"] = to_string(grid.pairing);
  j["gauss_residual_max"] = gauss_residual(grid, grid.c).max_abs();
  if (grid.samples.size() >= 3) {
    j["codazzi_residual_max"] = stage(kExitNumerical, [&] { return codazzi_residual(grid).max_abs(); });
  }
  j["outputs"] = {{"forms", path}};
  return j;
}

json run_immerse(const Pipeline& p) {
  const RunConfig& c = p.config();
  const std::string mesh = out_path(c, mesh_name(c));
  const std::string diag = out_path(c, "immerse.json");
  const std::vector<double> xs = c.x_grid.values(), ys = c.y_grid.values();
  const Profile prof = stage(kExitNumerical, [&] {
    return integrate_profile(p.evaluator(), AmbientModel(c.c), xs);
  });
  const SurfacePatch patch = stage(kExitNumerical, [&] { return sweep_surface(prof, ys); });
  std::ostringstream buf;
  stage(kExitConfig, [&] { write_mesh(buf, patch, c.mesh_format, c.projection, p.meta()); });
  json j = header(p, "immerse");
  j["model"] = to_string(patch.model.kind());
  j["nx"] = patch.nx();
  j["ny"] = patch.ny();
  j["profile_repairs"] = prof.repairs;
  j["profile_max_drift"] = *std::max_element(prof.drift.begin(), prof.drift.end());
  j["max_drift"] = patch.max_drift;
  j["patch_hash"] = patch_hash(patch);
  if (patch.model.kind() != AmbientKind::Flat3) {
    double dev = 0.0;
    for (std::size_t i = 0; i < patch.nx(); ++i) {
      for (std::size_t k = 0; k < patch.ny(); ++k) {
        const Vec4 r = patch.position(i, k);
        dev = std::max(dev, std::abs(patch.model.inner(r, r) - 1.0 / c.c));
      }
    }
    j["space_form_constraint_max"] = dev;
  }
  j["mesh_format"] = to_string(c.mesh_format);
  j["projection"] = to_string(c.projection);
  j["outputs"] = {{"mesh", mesh}, {"diagnostics", diag}};
  stage(kExitIo, [&] {
    write_text(mesh, buf.str());
    write_text(diag, j.dump(2) + "\n");
  });
  return j;
}

json ladder_json(const RefinementLadder& L) {
  json lv = json::array();
  for (const LadderLevel& l : L.levels) {
    lv.push_back({{"h", l.h},
                  {"metric_rel_err", l.metric_rel_err},
                  {"second_form_rel_err", l.second_form_rel_err},
                  {"K_abs_err", l.K_abs_err},
                  {"H_abs_err", l.H_abs_err},
                  {"mixed_partial", l.mixed_partial}});
  }
  return {{"levels", lv},
          {"metric_orders", L.metric_orders},
          {"second_form_orders", L.second_form_orders},
          {"curvature_orders", L.curvature_orders}};
}

json run_verify(const Pipeline& p) {
  const RunConfig& c = p.config();
  const std::string path = out_path(c, c.outputs.report);
  const SurfacePatch patch = stage(kExitNumerical, [&] { return p.surface(); });
  const VerificationReport rep = stage(kExitNumerical, [&] {
    return run_report(patch, p.evaluator(), VerifyTolerances{}, c.negative_controls);
  });
  json j = header(p, "verify");
  j["seed"] = c.seed;
  j["report"] = report_to_json(rep);
  const double x0 = 0.5 * (c.x_grid.min + c.x_grid.max);
  const double y0 = 0.5 * (c.y_grid.min + c.y_grid.max);
  j["refinement_ladder"] = stage(kExitNumerical, [&] {
    return ladder_json(refinement_ladder(p.evaluator(), x0, y0, 2e-2));
  });
  if (c.identity_samples > 0) {
    j["identity_checks"] = stage(kExitNumerical, [&] {
      return identity_check_to_json(
          randomized_identity_checks(p.params(), c.c, c.seed, c.identity_samples));
    });
  }
  stage(kExitIo, [&] { write_text(path, j.dump(2) + "\n"); });
  json s = header(p, "verify");
  s["pass"] = rep.pass;
  s["patch_hash"] = rep.patch_hash;
  if (rep.negative.ran) s["negative_control_detected"] = rep.negative.detected;
  s["outputs"] = {{"report", path}};
  return s;
}

json params_json(const RunConfig& c) {
  const FootballParams fp = stage(kExitConfig, [&] { return validate_params(c.k1, c.k2); });
  json j;
  j["k1"] = fp.k1();
  j["k2"] = fp.k2();
  j["k3"] = fp.k3();
  j["kind"] = fp.kind() == SingularityKind::Cusp ? "cusp" : "conical";
  if (fp.kind() == SingularityKind::Conical) {
    const ConicalExponents e = conical_exponents(fp);
    j["sigma"] = e.sigma;
    j["beta"] = e.beta;
    j["gamma"] = e.gamma;
  } else {
    j["sigma"] = nullptr;
    j["beta"] = nullptr;
    j["gamma"] = nullptr;
  }
  j["delta"] = closed_form_delta(fp);
  return j;
}

std::string cell_name(std::size_t index, double A, double s, double c) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "cell%03zu_A%.6g_s%.6g_c%.6g", index, A, s, c);
  return buf;
}

json run_cell(RunConfig cfg) {
  json r;
  try {
    auto p = prepare(cfg);
    r["solve_h"] = run_solve_h(*p);
    r["forms"] = run_forms(*p);
    r["immerse"] = run_immerse(*p);
    r["verify"] = run_verify(*p);
    r["exit_code"] = kExitOk;
  } catch (const Failure& f) {
    r["exit_code"] = f.code;
    r["error"] = f.kind;
    r["message"] = f.message;
  }
  return r;
}

json run_sweep(const RunConfig& base, std::vector<double> As, std::vector<double> ss,
               std::vector<double> cs, std::size_t jobs, int& worst) {
  if (As.empty()) As = {base.A};
  if (ss.empty()) {
    if (!base.s) {
      throw Failure{kExitConfig, "ConfigError", "sweep needs s values or a config with s"};
    }
    ss = {*base.s};
  }
  if (cs.empty()) cs = {base.c};
  struct Cell {
    std::string name;
    RunConfig cfg;
  };
  std::vector<Cell> cells;
  for (double A : As) {
    for (double s : ss) {
      for (double c : cs) {
        Cell cell{cell_name(cells.size(), A, s, c), base};
        cell.cfg.A = A;
        cell.cfg.s = s;
        cell.cfg.H0.reset();
        cell.cfg.c = c;
        if (c != 0.0 && cell.cfg.mesh_format != MeshFormat::CSV4D &&
            cell.cfg.projection == Projection::None) {
          cell.cfg.mesh_format = MeshFormat::CSV4D;
        }
        cell.cfg.outputs.dir = (std::filesystem::path(base.outputs.dir) / cell.name).string();
        cell.cfg.outputs.mesh = OutputPaths{}.mesh;
        cells.push_back(std::move(cell));
      }
    }
  }
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<json> results(cells.size());
  for (std::size_t start = 0; start < cells.size(); start += jobs) {
    const std::size_t stop = std::min(cells.size(), start + jobs);
    std::vector<std::future<json>> batch;
    for (std::size_t k = start; k < stop; ++k) {
      batch.push_back(std::async(std::launch::async, run_cell, cells[k].cfg));
    }
    for (std::size_t k = start; k < stop; ++k) results[k] = batch[k - start].get();
  }
  json list = json::array();
  worst = kExitOk;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    json e = {{"cell", cells[k].name},
              {"A", cells[k].cfg.A},
              {"s", *cells[k].cfg.s},
              {"c", cells[k].cfg.c},
              {"config_hash", config_hash(cells[k].cfg)},
              {"exit_code", results[k]["exit_code"]}};
    if (results[k].contains("error")) {
      e["error"] = results[k]["error"];
      e["message"] = results[k]["message"];
    } else {
      e["verify_pass"] = results[k]["verify"]["pass"];
    }
    worst = std::max(worst, results[k]["exit_code"].get<int>());
    list.push_back(std::move(e));
  }
  json summary = {{"command", "sweep"},
                  {"artifact_version", kArtifactVersion},
                  {"config_hash", config_hash(base)},
                  {"cells", list}};
  const std::string path = out_path(base, "sweep_summary.json");
  stage(kExitIo, [&] { write_text(path, summary.dump(2) + "\n"); });
  return summary;
}

void emit_failure(std::ostream& err, const Failure& f) {
  err << json{{"error", f.kind}, {"message", f.message}, {"exit_code", f.code}}.dump() << '\n';
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"HCMU football metrics realised as Weingarten surfaces in space forms", "hcmu"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kArtifactVersion);

  Options o;
  std::vector<double> sweep_A, sweep_s, sweep_c;
  std::size_t jobs = 0;
  std::string classify_input;

  auto* params = app.add_subcommand("params", "validate K1, K2 and print derived constants");
  params->add_option("--config", o.config, "JSON run configuration");
  params->add_option("--k1", o.k1, "maximum curvature K1");
  params->add_option("--k2", o.k2, "minimum curvature K2");
  auto* solve = app.add_subcommand("solve-h", "integrate H(K) and write the K,H,H' table");
  auto* forms = app.add_subcommand("forms", "write the fundamental forms on the x grid");
  auto* immerse = app.add_subcommand("immerse", "integrate the frame and write a mesh");
  auto* verify = app.add_subcommand("verify", "finite-difference verification report");
  auto* classify = app.add_subcommand("classify", "Weingarten classification of form data");
  auto* sweep = app.add_subcommand("sweep", "run every (A, s, c) combination");
  for (auto* sub : {solve, forms, immerse, verify, classify, sweep}) add_run_options(sub, o);
  classify->add_option("--input", classify_input, "forms or formdata file")->required();
  sweep->add_option("--A-values", sweep_A, "comma separated A values")->delimiter(',');
  sweep->add_option("--s-values", sweep_s, "comma separated s values")->delimiter(',');
  sweep->add_option("--c-values", sweep_c, "comma separated c values")->delimiter(',');
  sweep->add_option("--jobs", jobs, "parallel cells (0: hardware threads)");

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("hcmu");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    // Help and version requests surface as zero-code parse errors.
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    emit_failure(err, Failure{kExitConfig, "UsageError", e.what()});
    return kExitConfig;
  }

  try {
    if (params->parsed()) {
      const RunConfig c = stage(kExitConfig, [&] {
        RunConfig r = o.config.empty() ? RunConfig{} : load_config(o.config);
        if (o.k1) r.k1 = *o.k1;
        if (o.k2) r.k2 = *o.k2;
        return r;
      });
      out << params_json(c).dump(2) << '\n';
      return kExitOk;
    }
    const RunConfig cfg = resolve(o);
    if (classify->parsed()) {
      const std::vector<double> ys = cfg.y_grid.values();
      const FormDataGrid g = stage(kExitIo, [&] { return read_classifier_input(classify_input, ys); });
      const ClassifyResult r = stage(kExitConfig, [&] { return classify_weingarten(g); });
      json j = {{"command", "classify"},
                {"artifact_version", kArtifactVersion},
                {"config_hash", config_hash(cfg)},
                {"input", classify_input},
                {"nx", g.nx()},
                {"ny", g.ny()},
                {"result", classify_to_json(r)}};
      const std::string path = out_path(cfg, "classify.json");
      stage(kExitIo, [&] { write_text(path, j.dump(2) + "\n"); });
      out << j.dump() << '\n';
      return kExitOk;
    }
    if (sweep->parsed()) {
      int worst = kExitOk;
      const json s = run_sweep(cfg, sweep_A, sweep_s, sweep_c, jobs, worst);
      out << s.dump() << '\n';
      return worst;
    }
    auto p = prepare(cfg);
    json summary;
    if (solve->parsed()) summary = run_solve_h(*p);
    if (forms->parsed()) summary = run_forms(*p);
    if (immerse->parsed()) summary = run_immerse(*p);
    if (verify->parsed()) summary = run_verify(*p);
    out << summary.dump() << '\n';
    return kExitOk;
  } catch (const Failure& f) {
    emit_failure(err, f);
    return f.code;
  } catch (const Error& e) {
    const Failure f{code_for(e.kind(), kExitNumerical), std::string(to_string(e.kind())), e.what()};
    emit_failure(err, f);
    return f.code;
  }
}

int dispatch(const std::vector<std::string>& args) { return dispatch(args, std::cout, std::cerr); }

}  // namespace hcmu::cli
