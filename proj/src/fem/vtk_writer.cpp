#include <fstream>
#include <iomanip>
#include <ostream>

#include "ifenn/errors.hpp"
#include "ifenn/fem.hpp"

namespace ifenn::fem {

void write_vtk(std::ostream& os, const StructuredMesh& mesh, const std::vector<VtkField>& fields,
               const std::string& title) {
  const int dim = mesh.dim();
  const std::size_t nn = mesh.node_count();
  const std::size_t nc = mesh.cell_count();
  const int npc = mesh.nodes_per_cell();
  for (const auto& f : fields) {
    if (f.components != 1 && f.components != dim) {
      throw InvalidArgument("VTK field " + f.name + ": components must be 1 or the mesh dimension");
    }
    if (f.values.size() != nn * f.components) throw InvalidArgument("VTK field " + f.name + " has wrong length");
    if (f.name.empty() || f.name.find(' ') != std::string::npos) {
      throw InvalidArgument("VTK field names must be non-empty without spaces");
    }
  }

  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << std::setprecision(17);
  os << "POINTS " << nn << " double\n";
  for (const auto& p : mesh.nodes()) os << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';

  os << "CELLS " << nc << ' ' << nc * (npc + 1) << '\n';
  for (std::size_t c = 0; c < nc; ++c) {
    os << npc;
    for (auto n : mesh.cell(c)) os << ' ' << n;
    os << '\n';
  }
  os << "CELL_TYPES " << nc << '\n';
  const int type = dim == 2 ? 9 : 12;  // VTK_QUAD, VTK_HEXAHEDRON
  for (std::size_t c = 0; c < nc; ++c) os << type << '\n';

  if (fields.empty()) return;
  os << "POINT_DATA " << nn << '\n';
  for (const auto& f : fields) {
    if (f.components == 1) {
      os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f.values) os << v << '\n';
    } else {
      os << "VECTORS " << f.name << " double\n";
      for (std::size_t n = 0; n < nn; ++n) {
        for (int d = 0; d < 3; ++d) os << (d ? " " : "") << (d < dim ? f.values[n * dim + d] : 0.0);
        os << '\n';
      }
    }
  }
}

void write_vtk(const std::string& path, const StructuredMesh& mesh, const std::vector<VtkField>& fields,
               const std::string& title) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  write_vtk(os, mesh, fields, title);
}

CsvWriter::CsvWriter(const std::string& path, std::vector<std::string> columns)
    : path_(path), width_(columns.size()) {
  std::ofstream os(path_);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
}

void CsvWriter::row(std::span<const double> values) {
  if (values.size() != width_) throw InvalidArgument("CSV row width does not match header");
  std::ofstream os(path_, std::ios::app);
  os << std::setprecision(12);
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
  os << '\n';
}

}  // namespace ifenn::fem
