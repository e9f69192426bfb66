#pragma once

#include "llgfem/field.hpp"
#include "llgfem/mesh.hpp"
#include "llgfem/scheme.hpp"

#include <cstdint>
#include <string>

namespace llgfem {

struct ConfigError : Error {
  using Error::Error;
};

struct MeshSource {
  enum class Kind { box, file };
  Kind kind = Kind::box;
  int nx = 4, ny = 4, nz = 4;
  Vec3 lengths{1, 1, 1};
  std::string path;
};

struct InitialCondition {
  enum class Kind { uniform, random_seeded, file };
  Kind kind = Kind::uniform;
  Vec3 direction{1, 0, 0};  // normalized on use
  std::uint64_t seed = 1;
  std::string path;
};

struct OutputConfig {
  std::string csv_path;   // empty: no CSV
  std::string vtk_dir;    // empty: no snapshots
  int stride = 10;        // record/snapshot every `stride` steps
};

struct RunConfig {
  MeshSource mesh;
  MaterialParams material;
  SchemeConfig scheme;
  StrayFieldBackend stray;
  InitialCondition initial;
  OutputConfig output;
  bool strict_regimes = true;  // stabilization-regime violations are fatal
};

/// Flat `[section]` + `key=value` format; pairs may share a line with the
/// section header.  Unknown sections/keys and malformed values are errors
/// (reported with line numbers).  Defaults are documented in the README.
RunConfig parse_config(const std::string& path);

/// Same validation pass on an already-built config (used by tests).
void validate_run_config(const RunConfig& cfg);

Mesh make_mesh(const MeshSource& src);
NodalField make_initial(const InitialCondition& init, const Mesh& mesh);

}  // namespace llgfem
