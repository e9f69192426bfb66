#include "llgfem/mesh.hpp"

#include "llgfem/fem.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace llgfem {

namespace {

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c,
                     const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

std::array<int, 3> sorted_face(int a, int b, int c) {
  std::array<int, 3> f{a, b, c};
  std::sort(f.begin(), f.end());
  return f;
}

// Faces of tet (v0,v1,v2,v3); the face at position k is opposite vertex k.
constexpr int kFaceCorners[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};

}  // namespace

double Mesh::total_volume() const {
  double vol = 0.0;
  for (const auto& t : tets)
    vol += signed_volume(vertices[t[0]], vertices[t[1]], vertices[t[2]],
                         vertices[t[3]]);
  return vol;
}

double Mesh::max_diameter() const {
  double h = 0.0;
  for (const auto& t : tets)
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        h = std::max(h, (vertices[t[a]] - vertices[t[b]]).norm());
  return h;
}

std::vector<std::array<int, 3>> Mesh::boundary_faces() const {
  std::map<std::array<int, 3>, int> count;
  for (const auto& t : tets)
    for (const auto& fc : kFaceCorners)
      ++count[sorted_face(t[fc[0]], t[fc[1]], t[fc[2]])];
  std::vector<std::array<int, 3>> out;
  for (const auto& [face, n] : count)
    if (n == 1) out.push_back(face);
  return out;
}

void Mesh::validate() const {
  const int n = num_vertices();
  if (n == 0 || tets.empty()) throw Error("mesh is empty");
  for (size_t k = 0; k < tets.size(); ++k) {
    const auto& t = tets[k];
    for (int v : t)
      if (v < 0 || v >= n)
        throw Error("tet " + std::to_string(k) + ": vertex index " +
                    std::to_string(v) + " out of range [0," +
                    std::to_string(n) + ")");
    const double vol = signed_volume(vertices[t[0]], vertices[t[1]],
                                     vertices[t[2]], vertices[t[3]]);
    if (!(vol > 0.0))
      throw Error("tet " + std::to_string(k) +
                  ": non-positive signed volume " + std::to_string(vol));
  }
  std::map<std::array<int, 3>, int> count;
  for (const auto& t : tets)
    for (const auto& fc : kFaceCorners)
      ++count[sorted_face(t[fc[0]], t[fc[1]], t[fc[2]])];
  for (const auto& [face, c] : count)
    if (c > 2)
      throw Error("face (" + std::to_string(face[0]) + "," +
                  std::to_string(face[1]) + "," + std::to_string(face[2]) +
                  ") shared by " + std::to_string(c) + " tets");
}

namespace {

// Kuhn subdivision: one tet per permutation of the axes, tracing the cube
// from corner (0,0,0) to (1,1,1). Odd permutations are stored with two
// vertices swapped to keep the signed volume positive.
constexpr int kAxisPerms[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1},
                                  {0, 2, 1}, {2, 1, 0}, {1, 0, 2}};
constexpr bool kPermOdd[6] = {false, false, false, true, true, true};

Mesh build_box_lattice(int nx, int ny, int nz, const Vec3& spacing,
                       const Eigen::Vector3i& origin_cells) {
  Mesh mesh;
  const auto vid = [&](int i, int j, int k) {
    return i + (nx + 1) * (j + (ny + 1) * k);
  };
  mesh.vertices.reserve(static_cast<size_t>(nx + 1) * (ny + 1) * (nz + 1));
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        mesh.vertices.emplace_back(
            static_cast<double>(i + origin_cells[0]) * spacing[0],
            static_cast<double>(j + origin_cells[1]) * spacing[1],
            static_cast<double>(k + origin_cells[2]) * spacing[2]);

  mesh.tets.reserve(static_cast<size_t>(nx) * ny * nz * 6);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        for (int p = 0; p < 6; ++p) {
          int c[3] = {i, j, k};
          std::array<int, 4> tet;
          tet[0] = vid(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[kAxisPerms[p][s]];
            tet[s + 1] = vid(c[0], c[1], c[2]);
          }
          if (kPermOdd[p]) std::swap(tet[1], tet[2]);
          mesh.tets.push_back(tet);
        }

  mesh.box = BoxSpec{nx, ny, nz, spacing, origin_cells};
  return mesh;
}

}  // namespace

Mesh build_box_mesh(int nx, int ny, int nz, const Vec3& lengths) {
  if (nx < 1 || ny < 1 || nz < 1)
    throw Error("box mesh needs at least one cell per axis");
  if (!(lengths.minCoeff() > 0.0))
    throw Error("box mesh needs positive edge lengths");
  const Vec3 spacing(lengths[0] / nx, lengths[1] / ny, lengths[2] / nz);
  Mesh mesh = build_box_lattice(nx, ny, nz, spacing, Eigen::Vector3i::Zero());
  mesh.validate();
  return mesh;
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line,
                             const std::string& what) {
  throw Error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

Mesh load_mesh_native(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file " + path);

  Mesh mesh;
  std::string line;
  int lineno = 0;
  enum { kMagic, kCounts, kVertices, kTets, kDone } stage = kMagic;
  size_t want_vertices = 0, want_tets = 0;

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    switch (stage) {
      case kMagic: {
        std::string magic;
        int version = 0;
        if (!(ls >> magic)) continue;  // blank line
        if (!(ls >> version) || magic != "tetmesh" || version != 1)
          parse_fail(path, lineno, "expected header 'tetmesh 1'");
        stage = kCounts;
        break;
      }
      case kCounts: {
        long long nv = 0, nt = 0;
        if (!(ls >> nv)) continue;
        if (!(ls >> nt) || nv <= 0 || nt <= 0)
          parse_fail(path, lineno, "expected '<N_vertices> <N_tets>'");
        want_vertices = static_cast<size_t>(nv);
        want_tets = static_cast<size_t>(nt);
        mesh.vertices.reserve(want_vertices);
        mesh.tets.reserve(want_tets);
        stage = kVertices;
        break;
      }
      case kVertices: {
        double x, y, z;
        if (!(ls >> x)) continue;
        if (!(ls >> y >> z)) parse_fail(path, lineno, "expected 'x y z'");
        mesh.vertices.emplace_back(x, y, z);
        if (mesh.vertices.size() == want_vertices) stage = kTets;
        break;
      }
      case kTets: {
        long long i, j, k, l;
        if (!(ls >> i)) continue;
        if (!(ls >> j >> k >> l)) parse_fail(path, lineno, "expected 'i j k l'");
        mesh.tets.push_back({static_cast<int>(i), static_cast<int>(j),
                             static_cast<int>(k), static_cast<int>(l)});
        if (mesh.tets.size() == want_tets) stage = kDone;
        break;
      }
      case kDone: {
        std::string extra;
        if (ls >> extra) parse_fail(path, lineno, "trailing content");
        break;
      }
    }
  }
  if (stage != kDone)
    throw Error(path + ": truncated file (expected " +
                std::to_string(want_vertices) + " vertices and " +
                std::to_string(want_tets) + " tets)");
  try {
    mesh.validate();
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
  return mesh;
}

void write_mesh_native(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file " + path);
  out << "tetmesh 1\n";
  out << mesh.num_vertices() << ' ' << mesh.num_tets() << '\n';
  char buf[96];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", v[0], v[1], v[2]);
    out << buf;
  }
  for (const auto& t : mesh.tets)
    out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  if (!out) throw Error("write failed for " + path);
}

MeshAuditReport audit_mesh(const Mesh& mesh) {
  MeshAuditReport report;
  const StiffnessOperator stiff = assemble_stiffness(mesh);

  report.max_offdiag = -std::numeric_limits<double>::infinity();
  for (int col = 0; col < stiff.K.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(stiff.K, col); it;
         ++it) {
      if (it.row() == it.col()) continue;
      report.max_offdiag = std::max(report.max_offdiag, it.value());
      if (it.value() > 1e-12 && it.row() < it.col())
        report.violations.emplace_back(static_cast<int>(it.row()),
                                       static_cast<int>(it.col()));
    }
  report.satisfies_condition = report.max_offdiag <= 1e-12;

  // Dihedral angle between the faces opposite vertices a and b: the faces
  // meet along the edge {c,d}; use inward-pointing normal geometry.
  report.min_dihedral = std::numeric_limits<double>::infinity();
  report.max_dihedral = 0.0;
  for (const auto& t : mesh.tets) {
    const P1Gradients g = p1_gradients(
        {mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]],
         mesh.vertices[t[3]]});
    // grad of barycentric i is the inward normal of the face opposite i.
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) {
        const double c = g.grad[a].dot(g.grad[b]) /
                         (g.grad[a].norm() * g.grad[b].norm());
        const double angle = M_PI - std::acos(std::clamp(c, -1.0, 1.0));
        report.min_dihedral = std::min(report.min_dihedral, angle);
        report.max_dihedral = std::max(report.max_dihedral, angle);
      }
  }
  return report;
}

PaddedEmbedding embed_in_padded_box(const Mesh& mesh, double padding_factor) {
  if (padding_factor < 1.0)
    throw Error("padding factor must be >= 1");
  if (!mesh.box)
    throw Error("padded embedding requires a structured box mesh");
  const BoxSpec& box = *mesh.box;

  PaddedEmbedding out;
  if (padding_factor == 1.0) {
    out.padded = mesh;
    out.vertex_map.resize(mesh.num_vertices());
    for (int i = 0; i < mesh.num_vertices(); ++i) out.vertex_map[i] = i;
    return out;
  }

  // Extra cells per side, at the sample's cell size, so sample vertices land
  // exactly on padded lattice points.
  const int cells[3] = {box.nx, box.ny, box.nz};
  int ext[3], total[3];
  for (int a = 0; a < 3; ++a) {
    ext[a] = static_cast<int>(
        std::ceil(0.5 * (padding_factor - 1.0) * cells[a] - 1e-12));
    ext[a] = std::max(ext[a], 1);
    total[a] = cells[a] + 2 * ext[a];
  }
  const Eigen::Vector3i origin(box.origin_cells[0] - ext[0],
                               box.origin_cells[1] - ext[1],
                               box.origin_cells[2] - ext[2]);
  out.padded = build_box_lattice(total[0], total[1], total[2], box.spacing,
                                 origin);

  const auto pad_vid = [&](int i, int j, int k) {
    return i + (total[0] + 1) * (j + (total[1] + 1) * k);
  };
  out.vertex_map.resize(mesh.num_vertices());
  for (int k = 0; k <= box.nz; ++k)
    for (int j = 0; j <= box.ny; ++j)
      for (int i = 0; i <= box.nx; ++i) {
        const int src = i + (box.nx + 1) * (j + (box.ny + 1) * k);
        out.vertex_map[src] = pad_vid(i + ext[0], j + ext[1], k + ext[2]);
      }
  return out;
}

}  // namespace llgfem
