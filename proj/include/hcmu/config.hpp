#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace hcmu {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;

  /// n evenly spaced points from min to max (both included).
  std::vector<double> values() const;
};

enum class MeshFormat { OBJ, PLY, CSV4D };
enum class Projection { None, Stereographic };

struct OutputPaths {
  std::string dir;  // empty: $HCMU_OUT_DIR, else the working directory
  std::string csv = "h_table.csv";
  std::string forms = "forms.txt";
  std::string mesh = "surface.obj";
  std::string report = "report.json";
};

/// Everything a run depends on. Unknown keys are rejected when parsing.
struct RunConfig {
  double k1 = 1.0;
  double k2 = 0.0;
  double c = 0.0;
  double A = 0.0;
  std::string branch = "auto";  // plus | minus | auto (closed-form pairing)
  std::optional<double> s = 0.25;
  std::string closed_form_sign = "upper";  // upper | lower
  std::optional<double> K0;                // default (K1+K2)/2
  std::optional<double> H0;                // default: closed form at K0
  double margin = 1e-3;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.0;
  std::string on_event = "stop";  // stop | switch
  std::string pairing = "plus_negative_cos";  // plus_negative_cos | plus_positive_cos | auto
  GridSpec x_grid{-0.1, 0.1, 201};
  GridSpec y_grid{-0.05, 0.05, 101};
  std::size_t k_samples = 201;
  MeshFormat mesh_format = MeshFormat::OBJ;
  Projection projection = Projection::None;
  OutputPaths outputs;
  std::uint64_t seed = 42;
  std::size_t identity_samples = 10000;
  bool negative_controls = true;
};

/// Throws ConfigError naming the offending key.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

/// Reads and parses a JSON config file (IoError / ConfigError).
RunConfig load_config(const std::string& path);

/// Structural checks that do not need the numerics (grids, enums, tolerances).
void check_config(const RunConfig& cfg);

/// FNV-1a of the canonical JSON, excluding output locations.
std::string config_hash(const RunConfig& cfg);

const char* to_string(MeshFormat f);
const char* to_string(Projection p);

}  // namespace hcmu
