#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include <json.hpp>

#include "hcmu/config.hpp"
#include "hcmu/curvature_ode.hpp"
#include "hcmu/fundamental_forms.hpp"
#include "hcmu/immersion.hpp"
#include "hcmu/verify.hpp"

namespace hcmu {

/// Stamped into every output file.
struct OutputMeta {
  std::string version = kArtifactVersion;
  std::string config_hash;
};

/// %.17g, which round-trips every finite double.
std::string format_double(double v);

// Forms files:
//   # hcmu-forms v1
//   # version=<v> config_hash=<h> c=<c> A=<A> rows=<n>
//   x K e_u H theta h11 h12 h22 kp1 kp2
//   <n rows, space separated>
// Reading restores u_x as NaN and recomputes sin/cos(theta) and Q.

inline constexpr const char* kFormsMagic = "# hcmu-forms v1";

struct FormsFile {
  OutputMeta meta;
  FormsGrid grid;
};

void write_forms(std::ostream& out, const FormsGrid& grid, const OutputMeta& meta);
void write_forms(const std::string& path, const FormsGrid& grid, const OutputMeta& meta);

/// FormatError carries the 1-based line number of the first bad line.
FormsFile read_forms(std::istream& in);
FormsFile read_forms(const std::string& path);

// Two-dimensional form data for the classifier:
//   # hcmu-formdata v1
//   # version=<v> config_hash=<h> c=<c> nx=<nx> ny=<ny>
//   x y K e_u h11 h12 h22
//   <nx*ny rows, x-major>

inline constexpr const char* kFormDataMagic = "# hcmu-formdata v1";

void write_form_data(std::ostream& out, const FormDataGrid& grid, const OutputMeta& meta);
void write_form_data(const std::string& path, const FormDataGrid& grid, const OutputMeta& meta);
FormDataGrid read_form_data(std::istream& in);
FormDataGrid read_form_data(const std::string& path);

/// Either file kind: forms files are extruded along `y`.
FormDataGrid read_classifier_input(const std::string& path, std::span<const double> y);

/// CSV with columns K,H,dH_dK,branch on the given K grid.
void write_h_table(std::ostream& out, const HSolution& sol, std::span<const double> K_grid,
                   const OutputMeta& meta);

/// OBJ and PLY need Flat3 coordinates or a stereographic projection;
/// otherwise UnsupportedModel. Projection maps the sphere from the pole
/// (0,0,0,-R) and the hyperboloid to the Poincare ball.
void write_mesh(std::ostream& out, const SurfacePatch& patch, MeshFormat format,
                Projection projection, const OutputMeta& meta);
void write_mesh(const std::string& path, const SurfacePatch& patch, MeshFormat format,
                Projection projection, const OutputMeta& meta);

/// Projected 3-space position and unit normal; identity for Flat3.
std::pair<Eigen::Vector3d, Eigen::Vector3d> project_point(const AmbientModel& model,
                                                          const Vec4& r, const Vec4& n);

nlohmann::json report_to_json(const VerificationReport& rep, bool include_points = false);
nlohmann::json identity_check_to_json(const IdentityCheck& chk);
nlohmann::json classify_to_json(const ClassifyResult& r);

/// Writes `text` to `path`, creating parent directories. IoError on failure.
void write_text(const std::string& path, const std::string& text);

}  // namespace hcmu
