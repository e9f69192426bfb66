#include "llgfem/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace llgfem {

namespace {

[[noreturn]] void fail(const std::string& path, int line,
                       const std::string& what) {
  throw ConfigError(path + ":" + std::to_string(line) + ": " + what);
}

double parse_num(const std::string& path, int line, const std::string& key,
                 const std::string& val) {
  size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(val, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != val.size())
    fail(path, line, "key '" + key + "': cannot parse number '" + val + "'");
  return x;
}

int parse_int(const std::string& path, int line, const std::string& key,
              const std::string& val) {
  size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(val, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != val.size())
    fail(path, line, "key '" + key + "': cannot parse integer '" + val + "'");
  return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& path, int line,
                        const std::string& key, const std::string& val) {
  size_t pos = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(val, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != val.size())
    fail(path, line, "key '" + key + "': cannot parse seed '" + val + "'");
  return x;
}

Vec3 parse_vec3(const std::string& path, int line, const std::string& key,
                const std::string& val) {
  Vec3 v;
  size_t start = 0;
  for (int c = 0; c < 3; ++c) {
    const size_t comma = val.find(',', start);
    const bool last = (c == 2);
    if (last != (comma == std::string::npos))
      fail(path, line, "key '" + key + "': expected 'x,y,z', got '" + val + "'");
    const std::string part =
        val.substr(start, last ? std::string::npos : comma - start);
    v[c] = parse_num(path, line, key, part);
    start = comma + 1;
  }
  return v;
}

bool parse_bool(const std::string& path, int line, const std::string& key,
                const std::string& val) {
  if (val == "true" || val == "1") return true;
  if (val == "false" || val == "0") return false;
  fail(path, line, "key '" + key + "': expected true/false, got '" + val + "'");
}

}  // namespace

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);

  RunConfig cfg;
  std::string line, section;
  int lineno = 0;

  const auto handle = [&](const std::string& key, const std::string& val) {
    if (section == "mesh") {
      if (key == "kind") {
        if (val == "box")
          cfg.mesh.kind = MeshSource::Kind::box;
        else if (val == "file")
          cfg.mesh.kind = MeshSource::Kind::file;
        else
          fail(path, lineno, "mesh kind must be box or file, got '" + val + "'");
      } else if (key == "nx")
        cfg.mesh.nx = parse_int(path, lineno, key, val);
      else if (key == "ny")
        cfg.mesh.ny = parse_int(path, lineno, key, val);
      else if (key == "nz")
        cfg.mesh.nz = parse_int(path, lineno, key, val);
      else if (key == "lx")
        cfg.mesh.lengths[0] = parse_num(path, lineno, key, val);
      else if (key == "ly")
        cfg.mesh.lengths[1] = parse_num(path, lineno, key, val);
      else if (key == "lz")
        cfg.mesh.lengths[2] = parse_num(path, lineno, key, val);
      else if (key == "path")
        cfg.mesh.path = val;
      else
        fail(path, lineno, "unknown key '" + key + "' in [mesh]");
    } else if (section == "material") {
      if (key == "alpha")
        cfg.material.alpha = parse_num(path, lineno, key, val);
      else if (key == "d2")
        cfg.material.d2 = parse_num(path, lineno, key, val);
      else if (key == "Q")
        cfg.material.Q = parse_num(path, lineno, key, val);
      else if (key == "e")
        cfg.material.e_axis = parse_vec3(path, lineno, key, val);
      else if (key == "h_ext")
        cfg.material.H_ext = parse_vec3(path, lineno, key, val);
      else
        fail(path, lineno, "unknown key '" + key + "' in [material]");
    } else if (section == "scheme") {
      if (key == "variant") {
        try {
          cfg.scheme.variant = parse_variant(val);
        } catch (const Error& e) {
          fail(path, lineno, e.what());
        }
      } else if (key == "theta")
        cfg.scheme.theta = parse_num(path, lineno, key, val);
      else if (key == "tau")
        cfg.scheme.tau = parse_num(path, lineno, key, val);
      else if (key == "T")
        cfg.scheme.T_final = parse_num(path, lineno, key, val);
      else if (key == "rho") {
        if (val == "zero")
          cfg.scheme.rho_mode = RhoMode::zero;
        else if (val == "tau_log_tau")
          cfg.scheme.rho_mode = RhoMode::tau_log_tau;
        else {
          cfg.scheme.rho_mode = RhoMode::constant;
          cfg.scheme.rho_value = parse_num(path, lineno, key, val);
        }
      } else if (key == "M") {
        if (val == "inv_sqrt_tau")
          cfg.scheme.m_mode = MMode::inv_sqrt_tau;
        else {
          cfg.scheme.m_mode = MMode::fixed;
          cfg.scheme.M_value = parse_num(path, lineno, key, val);
        }
      } else if (key == "krylov_tol")
        cfg.scheme.krylov.tolerance = parse_num(path, lineno, key, val);
      else if (key == "krylov_maxit")
        cfg.scheme.krylov.max_iterations = parse_int(path, lineno, key, val);
      else if (key == "coupling") {
        if (val == "full")
          cfg.scheme.coupling = Coupling::full;
        else if (val == "drop_lower_order_implicit")
          cfg.scheme.coupling = Coupling::drop_lower_order_implicit;
        else
          fail(path, lineno, "unknown coupling '" + val + "'");
      } else if (key == "c_regime")
        cfg.scheme.c_regime = parse_num(path, lineno, key, val);
      else if (key == "c_budget")
        cfg.scheme.c_budget = parse_num(path, lineno, key, val);
      else if (key == "strict")
        cfg.strict_regimes = parse_bool(path, lineno, key, val);
      else
        fail(path, lineno, "unknown key '" + key + "' in [scheme]");
    } else if (section == "stray") {
      if (key == "mode") {
        try {
          cfg.stray.mode = parse_stray_mode(val);
        } catch (const Error& e) {
          fail(path, lineno, e.what());
        }
      } else if (key == "padding")
        cfg.stray.padding_factor = parse_num(path, lineno, key, val);
      else if (key == "tol")
        cfg.stray.tol = parse_num(path, lineno, key, val);
      else if (key == "maxit")
        cfg.stray.max_iterations = parse_int(path, lineno, key, val);
      else
        fail(path, lineno, "unknown key '" + key + "' in [stray]");
    } else if (section == "initial") {
      if (key == "kind") {
        if (val == "uniform")
          cfg.initial.kind = InitialCondition::Kind::uniform;
        else if (val == "random")
          cfg.initial.kind = InitialCondition::Kind::random_seeded;
        else if (val == "file")
          cfg.initial.kind = InitialCondition::Kind::file;
        else
          fail(path, lineno,
               "initial kind must be uniform, random or file, got '" + val +
                   "'");
      } else if (key == "m")
        cfg.initial.direction = parse_vec3(path, lineno, key, val);
      else if (key == "seed")
        cfg.initial.seed = parse_u64(path, lineno, key, val);
      else if (key == "path")
        cfg.initial.path = val;
      else
        fail(path, lineno, "unknown key '" + key + "' in [initial]");
    } else if (section == "output") {
      if (key == "csv")
        cfg.output.csv_path = val;
      else if (key == "vtk_dir")
        cfg.output.vtk_dir = val;
      else if (key == "stride")
        cfg.output.stride = parse_int(path, lineno, key, val);
      else
        fail(path, lineno, "unknown key '" + key + "' in [output]");
    } else if (section.empty()) {
      fail(path, lineno, "key '" + key + "' appears before any [section]");
    } else {
      fail(path, lineno, "unknown section [" + section + "]");
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      if (tok.front() == '[') {
        if (tok.back() != ']' || tok.size() < 3)
          fail(path, lineno, "malformed section header '" + tok + "'");
        section = tok.substr(1, tok.size() - 2);
        if (section != "mesh" && section != "material" &&
            section != "scheme" && section != "stray" &&
            section != "initial" && section != "output")
          fail(path, lineno, "unknown section [" + section + "]");
        continue;
      }
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == tok.size())
        fail(path, lineno, "expected key=value, got '" + tok + "'");
      handle(tok.substr(0, eq), tok.substr(eq + 1));
    }
  }

  // The easy axis is normalized here so the material invariant |e| = 1 holds
  // regardless of how it was written in the file.
  const double en = cfg.material.e_axis.norm();
  if (en < 1e-12) throw ConfigError(path + ": easy axis must be nonzero");
  cfg.material.e_axis /= en;

  validate_run_config(cfg);
  return cfg;
}

void validate_run_config(const RunConfig& cfg) {
  std::vector<std::string> bad;
  const auto check = [&](bool ok, const char* msg) {
    if (!ok) bad.emplace_back(msg);
  };

  if (cfg.mesh.kind == MeshSource::Kind::box) {
    check(cfg.mesh.nx >= 1 && cfg.mesh.ny >= 1 && cfg.mesh.nz >= 1,
          "[mesh] box needs nx,ny,nz >= 1");
    check(cfg.mesh.lengths.minCoeff() > 0.0,
          "[mesh] box needs positive lx,ly,lz");
  } else {
    check(!cfg.mesh.path.empty(), "[mesh] kind=file needs path=");
  }

  check(cfg.material.alpha > 0.0, "[material] alpha must be positive");
  check(cfg.material.d2 >= 0.0, "[material] d2 must be nonnegative");
  check(cfg.material.Q >= 0.0, "[material] Q must be nonnegative");

  check(cfg.scheme.tau > 0.0, "[scheme] tau must be positive");
  check(cfg.scheme.T_final >= 0.0, "[scheme] T must be nonnegative");
  if (cfg.scheme.variant == SchemeVariant::theta)
    check(cfg.scheme.theta >= 0.0 && cfg.scheme.theta <= 1.0,
          "[scheme] theta must lie in [0,1]");
  if (cfg.scheme.variant == SchemeVariant::order2) {
    if (cfg.scheme.m_mode == MMode::fixed)
      check(cfg.scheme.M_value > 0.0, "[scheme] M must be positive");
    if (cfg.scheme.rho_mode == RhoMode::constant)
      check(cfg.scheme.rho_value >= 0.0, "[scheme] rho must be nonnegative");
  }
  check(cfg.scheme.krylov.tolerance > 0.0,
        "[scheme] krylov_tol must be positive");
  check(cfg.scheme.krylov.max_iterations >= 1,
        "[scheme] krylov_maxit must be >= 1");
  check(cfg.scheme.c_regime > 0.0, "[scheme] c_regime must be positive");
  check(cfg.scheme.c_budget >= 0.0, "[scheme] c_budget must be nonnegative");

  if (cfg.stray.mode == StrayFieldBackend::Mode::truncated_fem) {
    check(cfg.stray.padding_factor >= 2.0, "[stray] padding must be >= 2");
    check(cfg.stray.tol > 0.0, "[stray] tol must be positive");
    check(cfg.stray.max_iterations >= 1, "[stray] maxit must be >= 1");
  }

  if (cfg.initial.kind == InitialCondition::Kind::uniform)
    check(cfg.initial.direction.norm() > 1e-12,
          "[initial] m must be a nonzero vector");
  if (cfg.initial.kind == InitialCondition::Kind::file)
    check(!cfg.initial.path.empty(), "[initial] kind=file needs path=");

  check(cfg.output.stride >= 1, "[output] stride must be >= 1");

  if (!bad.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& b : bad) msg += "\n  - " + b;
    throw ConfigError(msg);
  }
}

Mesh make_mesh(const MeshSource& src) {
  if (src.kind == MeshSource::Kind::box)
    return build_box_mesh(src.nx, src.ny, src.nz, src.lengths);
  return load_mesh_native(src.path);
}

NodalField make_initial(const InitialCondition& init, const Mesh& mesh) {
  const int n = mesh.num_vertices();
  switch (init.kind) {
    case InitialCondition::Kind::uniform:
      return uniform_field(n, init.direction.normalized());
    case InitialCondition::Kind::random_seeded:
      return random_unit_field(n, init.seed);
    case InitialCondition::Kind::file:
      break;
  }

  std::ifstream in(init.path);
  if (!in) throw Error("cannot open initial-condition file " + init.path);
  NodalField m(n, 3);
  std::string line;
  int lineno = 0, row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x)) continue;
    if (!(ls >> y >> z))
      throw Error(init.path + ":" + std::to_string(lineno) +
                  ": expected 'x y z'");
    if (row >= n)
      throw Error(init.path + ": more rows than mesh vertices (" +
                  std::to_string(n) + ")");
    const double norm = std::sqrt(x * x + y * y + z * z);
    if (norm < 1e-12)
      throw Error(init.path + ":" + std::to_string(lineno) +
                  ": zero vector cannot be normalized");
    m.row(row++) << x / norm, y / norm, z / norm;
  }
  if (row != n)
    throw Error(init.path + ": " + std::to_string(row) + " rows for " +
                std::to_string(n) + " mesh vertices");
  return m;
}

}  // namespace llgfem
