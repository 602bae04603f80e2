#include "hcmu/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <fstream>
#include <map>
#include <sstream>

#include "hcmu/errors.hpp"

namespace hcmu {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

[[noreturn]] void format_error(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::FormatError, "line " + std::to_string(line) + ": " + what, line);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

double parse_double(const std::string& tok, std::size_t line) {
  const char* b = tok.c_str();
  char* e = nullptr;
  const double v = std::strtod(b, &e);
  if (e == b || *e != '\0') format_error(line, "cannot parse number '" + tok + "'");
  return v;
}

std::size_t parse_count(const std::string& tok, std::size_t line) {
  const char* b = tok.c_str();
  char* e = nullptr;
  const unsigned long long v = std::strtoull(b, &e, 10);
  if (e == b || *e != '\0' || tok[0] == '-') format_error(line, "cannot parse count '" + tok + "'");
  return static_cast<std::size_t>(v);
}

/// Reads one line, stripping a trailing CR. Returns false at end of input.
bool next_line(std::istream& in, std::string& s, std::size_t& line) {
  if (!std::getline(in, s)) return false;
  ++line;
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return true;
}

void expect_magic(std::istream& in, std::size_t& line, const char* magic, const char* family) {
  std::string s;
  if (!next_line(in, s, line)) format_error(1, std::string("empty input, expected ") + magic);
  const std::string prefix = std::string("# ") + family + " v";
  if (s.rfind(prefix, 0) != 0) format_error(line, std::string("not a ") + family + " file");
  if (s != magic) {
    format_error(line, "version mismatch: expected '" + std::string(magic) + "', found '" + s + "'");
  }
}

std::map<std::string, std::string> read_meta(std::istream& in, std::size_t& line,
                                             std::initializer_list<const char*> required) {
  std::string s;
  if (!next_line(in, s, line)) format_error(line + 1, "missing metadata line");
  if (s.rfind("# ", 0) != 0) format_error(line, "metadata line must start with '# '");
  std::map<std::string, std::string> kv;
  for (const std::string& t : split_ws(s.substr(2))) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) format_error(line, "metadata token '" + t + "' is not key=value");
    kv[t.substr(0, eq)] = t.substr(eq + 1);
  }
  for (const char* k : required) {
    if (!kv.count(k)) format_error(line, std::string("metadata lacks '") + k + "'");
  }
  return kv;
}

void expect_columns(std::istream& in, std::size_t& line, const std::string& columns) {
  std::string s;
  if (!next_line(in, s, line)) format_error(line + 1, "missing column header");
  if (split_ws(s) != split_ws(columns)) format_error(line, "column header must be '" + columns + "'");
}

void expect_end(std::istream& in, std::size_t& line) {
  std::string s;
  while (next_line(in, s, line)) {
    if (!split_ws(s).empty()) format_error(line, "unexpected data after the last row");
  }
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "write to " + path + " failed");
}

const char* const kFormsColumns = "x K e_u H theta h11 h12 h22 kp1 kp2";
const char* const kFormDataColumns = "x y K e_u h11 h12 h22";

}  // namespace

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  finish(out, path);
}

void write_forms(std::ostream& out, const FormsGrid& grid, const OutputMeta& meta) {
  out << kFormsMagic << '\n';
  out << "# version=" << meta.version << " config_hash=" << meta.config_hash
      << " c=" << format_double(grid.c) << " A=" << format_double(grid.A)
      << " pairing=" << to_string(grid.pairing) << " rows=" << grid.samples.size() << '\n';
  out << kFormsColumns << '\n';
  for (const FormsSample& s : grid.samples) {
    const double v[] = {s.x, s.K, s.e_u, s.H, s.theta, s.h11, s.h12, s.h22, s.kp1, s.kp2};
    for (std::size_t i = 0; i < 10; ++i) out << (i ? " " : "") << format_double(v[i]);
    out << '\n';
  }
}

void write_forms(const std::string& path, const FormsGrid& grid, const OutputMeta& meta) {
  std::ofstream out = open_out(path);
  write_forms(out, grid, meta);
  finish(out, path);
}

FormsFile read_forms(std::istream& in) {
  std::size_t line = 0;
  expect_magic(in, line, kFormsMagic, "hcmu-forms");
  const auto kv = read_meta(in, line, {"version", "c", "A", "rows"});
  const std::size_t meta_line = line;
  FormsFile f;
  f.meta.version = kv.at("version");
  if (kv.count("config_hash")) f.meta.config_hash = kv.at("config_hash");
  f.grid.c = parse_double(kv.at("c"), meta_line);
  f.grid.A = parse_double(kv.at("A"), meta_line);
  if (kv.count("pairing")) {
    const std::string& p = kv.at("pairing");
    if (p == to_string(ThetaPairing::PlusPositiveCos)) {
      f.grid.pairing = ThetaPairing::PlusPositiveCos;
    } else if (p != to_string(ThetaPairing::PlusNegativeCos)) {
      format_error(meta_line, "unknown pairing '" + p + "'");
    }
  }
  const std::size_t rows = parse_count(kv.at("rows"), meta_line);
  expect_columns(in, line, kFormsColumns);

  f.grid.samples.reserve(rows);
  std::string s;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!next_line(in, s, line)) {
      format_error(line + 1, "truncated: expected " + std::to_string(rows) + " rows, found " +
                                 std::to_string(r));
    }
    const auto tok = split_ws(s);
    if (tok.size() != 10) {
      format_error(line, "expected 10 columns, found " + std::to_string(tok.size()));
    }
    FormsSample x{};
    double* dst[] = {&x.x, &x.K, &x.e_u, &x.H, &x.theta, &x.h11, &x.h12, &x.h22, &x.kp1, &x.kp2};
    for (std::size_t i = 0; i < 10; ++i) *dst[i] = parse_double(tok[i], line);
    x.u_x = std::numeric_limits<double>::quiet_NaN();
    x.sin_theta = std::sin(x.theta);
    x.cos_theta = std::cos(x.theta);
    x.Q = 0.25 * std::complex<double>(x.h11 - x.h22, -2.0 * x.h12);
    f.grid.samples.push_back(x);
  }
  expect_end(in, line);
  return f;
}

FormsFile read_forms(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_forms(in);
}

void write_form_data(std::ostream& out, const FormDataGrid& g, const OutputMeta& meta) {
  out << kFormDataMagic << '\n';
  out << "# version=" << meta.version << " config_hash=" << meta.config_hash
      << " c=" << format_double(g.c) << " nx=" << g.nx() << " ny=" << g.ny() << '\n';
  out << kFormDataColumns << '\n';
  for (std::size_t i = 0; i < g.nx(); ++i) {
    for (std::size_t j = 0; j < g.ny(); ++j) {
      const std::size_t k = g.index(i, j);
      const double v[] = {g.x[i], g.y[j], g.K[k], g.e_u[k], g.h11[k], g.h12[k], g.h22[k]};
      for (std::size_t m = 0; m < 7; ++m) out << (m ? " " : "") << format_double(v[m]);
      out << '\n';
    }
  }
}

void write_form_data(const std::string& path, const FormDataGrid& grid, const OutputMeta& meta) {
  std::ofstream out = open_out(path);
  write_form_data(out, grid, meta);
  finish(out, path);
}

FormDataGrid read_form_data(std::istream& in) {
  std::size_t line = 0;
  expect_magic(in, line, kFormDataMagic, "hcmu-formdata");
  const auto kv = read_meta(in, line, {"c", "nx", "ny"});
  const std::size_t meta_line = line;
  FormDataGrid g;
  const double c = parse_double(kv.at("c"), meta_line);
  const std::size_t nx = parse_count(kv.at("nx"), meta_line);
  const std::size_t ny = parse_count(kv.at("ny"), meta_line);
  g.resize(nx, ny);
  g.c = c;
  expect_columns(in, line, kFormDataColumns);
  std::string s;
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      if (!next_line(in, s, line)) {
        format_error(line + 1, "truncated: expected " + std::to_string(nx * ny) + " rows");
      }
      const auto tok = split_ws(s);
      if (tok.size() != 7) format_error(line, "expected 7 columns, found " + std::to_string(tok.size()));
      const double x = parse_double(tok[0], line);
      const double y = parse_double(tok[1], line);
      if (j == 0) {
        g.x[i] = x;
      } else if (x != g.x[i]) {
        format_error(line, "x changes within a row block");
      }
      if (i == 0) {
        g.y[j] = y;
      } else if (y != g.y[j]) {
        format_error(line, "y grid differs between row blocks");
      }
      const std::size_t k = g.index(i, j);
      g.K[k] = parse_double(tok[2], line);
      g.e_u[k] = parse_double(tok[3], line);
      g.h11[k] = parse_double(tok[4], line);
      g.h12[k] = parse_double(tok[5], line);
      g.h22[k] = parse_double(tok[6], line);
    }
  }
  expect_end(in, line);
  return g;
}

FormDataGrid read_form_data(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_form_data(in);
}

FormDataGrid read_classifier_input(const std::string& path, std::span<const double> y) {
  std::string first;
  {
    std::ifstream probe = open_in(path);
    std::getline(probe, first);
  }
  if (!first.empty() && first.back() == '\r') first.pop_back();
  if (first.rfind("# hcmu-formdata", 0) == 0) return read_form_data(path);
  const FormsFile f = read_forms(path);
  return extrude(f.grid, y);
}

void write_h_table(std::ostream& out, const HSolution& sol, std::span<const double> K_grid,
                   const OutputMeta& meta) {
  out << "# hcmu h-table version=" << meta.version << " config_hash=" << meta.config_hash << '\n';
  out << "# events:";
  if (sol.events().empty()) out << " none";
  for (const SolveEvent& e : sol.events()) out << ' ' << to_string(e.kind) << "@K=" << format_double(e.K);
  out << '\n';
  out << "K,H,dH_dK,branch\n";
  for (const HSample& s : sol.sample(K_grid)) {
    out << format_double(s.K) << ',' << format_double(s.H) << ',' << format_double(s.dH_dK) << ','
        << to_string(s.branch) << '\n';
  }
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> project_point(const AmbientModel& model,
                                                          const Vec4& r, const Vec4& n) {
  if (model.kind() == AmbientKind::Flat3) return {r.head<3>(), n.head<3>()};
  const double R = 1.0 / std::sqrt(std::abs(model.c()));
  const double d = R + r[3];
  if (!(d > 1e-12 * R)) {
    throw Error(ErrorKind::DomainError, "point lies at the projection pole");
  }
  const Eigen::Vector3d q = R * r.head<3>() / d;
  // Differential of the projection applied to n; conformality keeps it normal.
  Eigen::Vector3d m = R * n.head<3>() / d - R * r.head<3>() * n[3] / (d * d);
  const double len = m.norm();
  if (len > 0.0) m /= len;
  return {q, m};
}

namespace {

template <class T>
void put_le(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

std::string stamp(const SurfacePatch& patch, Projection projection, const OutputMeta& meta) {
  std::ostringstream os;
  os << "hcmu version=" << meta.version << " config_hash=" << meta.config_hash
     << " model=" << to_string(patch.model.kind()) << " c=" << format_double(patch.model.c())
     << " projection=" << to_string(projection);
  return os.str();
}

}  // namespace

void write_mesh(std::ostream& out, const SurfacePatch& patch, MeshFormat format,
                Projection projection, const OutputMeta& meta) {
  const bool flat = patch.model.kind() == AmbientKind::Flat3;
  if (!flat && format != MeshFormat::CSV4D && projection != Projection::Stereographic) {
    throw Error(ErrorKind::UnsupportedModel,
                std::string(to_string(format)) + " output needs 3-space coordinates; use csv4d "
                "or the stereographic projection for c != 0");
  }
  if (flat) projection = Projection::None;
  const std::size_t nx = patch.nx(), ny = patch.ny();

  if (format == MeshFormat::CSV4D) {
    out << "# " << stamp(patch, projection, meta) << '\n';
    out << "ix,iy,x,y,r0,r1,r2,r3,n0,n1,n2,n3";
    if (projection == Projection::Stereographic) out << ",p0,p1,p2";
    out << '\n';
    for (std::size_t i = 0; i < nx; ++i) {
      for (std::size_t j = 0; j < ny; ++j) {
        const Vec4 r = patch.position(i, j), n = patch.normal(i, j);
        out << i << ',' << j << ',' << format_double(patch.x[i]) << ',' << format_double(patch.y[j]);
        for (int k = 0; k < 4; ++k) out << ',' << format_double(r[k]);
        for (int k = 0; k < 4; ++k) out << ',' << format_double(n[k]);
        if (projection == Projection::Stereographic) {
          const auto q = project_point(patch.model, r, n).first;
          for (int k = 0; k < 3; ++k) out << ',' << format_double(q[k]);
        }
        out << '\n';
      }
    }
    return;
  }

  std::vector<Eigen::Vector3d> pos(nx * ny), nrm(nx * ny);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      const auto [q, m] = project_point(patch.model, patch.position(i, j), patch.normal(i, j));
      pos[patch.index(i, j)] = q;
      nrm[patch.index(i, j)] = m;
    }
  }
  // Quad (i,j)-(i+1,j)-(i+1,j+1)-(i,j+1) split along its diagonal; the
  // winding follows r_x x r_y.
  std::vector<std::array<std::size_t, 3>> faces;
  if (nx > 1 && ny > 1) faces.reserve(2 * (nx - 1) * (ny - 1));
  for (std::size_t i = 0; i + 1 < nx; ++i) {
    for (std::size_t j = 0; j + 1 < ny; ++j) {
      const std::size_t a = patch.index(i, j), b = patch.index(i + 1, j);
      const std::size_t c = patch.index(i + 1, j + 1), d = patch.index(i, j + 1);
      faces.push_back({a, b, c});
      faces.push_back({a, c, d});
    }
  }

  if (format == MeshFormat::OBJ) {
    out << "# " << stamp(patch, projection, meta) << '\n';
    out << "# grid " << nx << 'x' << ny << '\n';
    for (const auto& q : pos) {
      out << "v " << format_double(q[0]) << ' ' << format_double(q[1]) << ' ' << format_double(q[2])
          << '\n';
    }
    for (const auto& m : nrm) {
      out << "vn " << format_double(m[0]) << ' ' << format_double(m[1]) << ' '
          << format_double(m[2]) << '\n';
    }
    for (const auto& f : faces) {
      out << 'f';
      for (std::size_t v : f) out << ' ' << v + 1 << "//" << v + 1;
      out << '\n';
    }
    return;
  }

  out << "ply\nformat binary_little_endian 1.0\n";
  out << "comment " << stamp(patch, projection, meta) << '\n';
  out << "element vertex " << pos.size() << '\n';
  for (const char* p : {"x", "y", "z", "nx", "ny", "nz"}) out << "property double " << p << '\n';
  out << "element face " << faces.size() << '\n';
  out << "property list uchar int vertex_indices\nend_header\n";
  for (std::size_t k = 0; k < pos.size(); ++k) {
    for (int i = 0; i < 3; ++i) put_le(out, pos[k][i]);
    for (int i = 0; i < 3; ++i) put_le(out, nrm[k][i]);
  }
  for (const auto& f : faces) {
    put_le(out, static_cast<unsigned char>(3));
    for (std::size_t v : f) put_le(out, static_cast<std::int32_t>(v));
  }
}

void write_mesh(const std::string& path, const SurfacePatch& patch, MeshFormat format,
                Projection projection, const OutputMeta& meta) {
  std::ostringstream buf;
  write_mesh(buf, patch, format, projection, meta);
  write_text(path, buf.str());
}

json classify_to_json(const ClassifyResult& r) {
  return {{"is_weingarten", r.is_weingarten},
          {"h12_spread", r.h12_spread},
          {"H_depends_only_on_x", r.H_depends_only_on_x},
          {"H_y_spread", r.H_y_spread},
          {"h11_y_spread", r.h11_y_spread},
          {"reconstruction_certified", r.reconstruction_certified},
          {"reconstruction_y_spread", r.reconstruction_y_spread}};
}

json identity_check_to_json(const IdentityCheck& c) {
  return {{"samples", c.samples},
          {"epsilon_equivalence_max", c.epsilon_equivalence_max},
          {"theta_unit_max", c.theta_unit_max},
          {"hopf_max", c.hopf_max},
          {"gauss_det_max", c.gauss_det_max},
          {"h12_max", c.h12_max}};
}

json report_to_json(const VerificationReport& rep, bool include_points) {
  json j;
  j["patch_hash"] = rep.patch_hash;
  j["pass"] = rep.pass;
  const VerifyTolerances& t = rep.tol;
  j["tolerances"] = {{"metric_rel", t.metric_rel},         {"second_form_rel", t.second_form_rel},
                     {"curvature_abs", t.curvature_abs},   {"mixed_partial_rel", t.mixed_partial_rel},
                     {"codazzi_abs", t.codazzi_abs},       {"codazzi_step", t.codazzi_step},
                     {"h12_abs", t.h12_abs},               {"drift", t.drift}};
  j["summary"] = {{"interior_points", rep.points.size()},
                  {"max_metric_rel", rep.max_metric_rel},
                  {"max_second_form_rel", rep.max_second_form_rel},
                  {"max_K_abs", rep.max_K_abs},
                  {"max_H_abs", rep.max_H_abs},
                  {"max_mixed_partial", rep.max_mixed_partial},
                  {"codazzi_max", rep.codazzi_max},
                  {"max_drift", rep.max_drift}};
  j["h12"] = {{"expected", rep.expected_h12}, {"max_dev", rep.h12_max_dev}};
  j["reconstructed_classification"] = classify_to_json(rep.reconstructed);
  const NegativeControl& n = rep.negative;
  j["negative_control"] = {{"ran", n.ran},
                           {"H_perturbation", n.H_perturbation},
                           {"codazzi_max", n.codazzi_max},
                           {"mixed_partial_max", n.mixed_partial_max},
                           {"report_failed", n.report_failed},
                           {"detected", n.detected}};
  if (include_points) {
    json pts = json::array();
    for (const PointResidual& p : rep.points) {
      pts.push_back({{"ix", p.ix},
                     {"iy", p.iy},
                     {"metric_rel_err", p.metric_rel_err},
                     {"second_form_rel_err", p.second_form_rel_err},
                     {"K_abs_err", p.K_abs_err},
                     {"H_abs_err", p.H_abs_err},
                     {"mixed_partial", p.mixed_partial}});
    }
    j["points"] = std::move(pts);
  }
  return j;
}

}  // namespace hcmu
