#include "llgfem/output.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace llgfem {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(const std::string& path, const std::vector<StepRecord>& records,
               const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "t,E_total,E_exch,E_stray,E_zeeman,E_aniso,"
         "v_l2,tangency_residual,energy_law_slack\n";
  for (const auto& r : records) {
    out << format_double(r.t) << ',' << format_double(r.energy.total) << ','
        << format_double(r.energy.exchange) << ','
        << format_double(r.energy.stray) << ','
        << format_double(r.energy.zeeman) << ','
        << format_double(r.energy.aniso) << ',' << format_double(r.v_l2)
        << ',' << format_double(r.tangency_residual) << ','
        << format_double(r.energy_slack) << '\n';
  }
  if (!out) throw Error("write failed for " + path);
}

void write_vtk_snapshot(const std::string& path, const Mesh& mesh,
                        const NodalField& m) {
  if (m.rows() != mesh.num_vertices())
    throw Error("snapshot field size does not match the mesh");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "# vtk DataFile Version 3.0\n"
         "magnetization snapshot\n"
         "ASCII\n"
         "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& v : mesh.vertices)
    out << format_double(v[0]) << ' ' << format_double(v[1]) << ' '
        << format_double(v[2]) << '\n';
  out << "CELLS " << mesh.num_tets() << ' ' << 5 * mesh.num_tets() << '\n';
  for (const auto& t : mesh.tets)
    out << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  out << "CELL_TYPES " << mesh.num_tets() << '\n';
  for (int k = 0; k < mesh.num_tets(); ++k) out << "10\n";
  out << "POINT_DATA " << mesh.num_vertices() << '\n';
  out << "VECTORS m double\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    out << format_double(m(i, 0)) << ' ' << format_double(m(i, 1)) << ' '
        << format_double(m(i, 2)) << '\n';
  if (!out) throw Error("write failed for " + path);
}

NodalField read_vtk_point_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string tok;
  long long n = -1;
  while (in >> tok) {
    if (tok == "POINT_DATA") {
      if (!(in >> n) || n < 0)
        throw Error(path + ": malformed POINT_DATA count");
    } else if (tok == "VECTORS" && n >= 0) {
      std::string name, type;
      if (!(in >> name >> type))
        throw Error(path + ": malformed VECTORS header");
      NodalField m(n, 3);
      for (long long i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c)
          if (!(in >> m(i, c)))
            throw Error(path + ": truncated VECTORS data");
      return m;
    }
  }
  throw Error(path + ": no point vector data found");
}

}  // namespace llgfem
