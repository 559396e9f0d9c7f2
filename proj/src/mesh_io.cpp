#include "fricsim/mesh_io.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "fricsim/error.hpp"

namespace fricsim {
namespace {

// Six tets of a hex along its 0-7 diagonal; corner index bits are (x, y, z).
void split_hex(const std::array<int, 8>& c, std::vector<Tet>& out) {
  static constexpr int kPaths[6][2] = {{1, 2}, {1, 4}, {2, 1}, {2, 4}, {4, 1}, {4, 2}};
  for (const auto& p : kPaths) {
    const int a = p[0];
    const int b = a | p[1];
    out.push_back({c[0], c[a], c[b], c[7]});
  }
}

void orient_positive(TetMesh& mesh) {
  for (auto& t : mesh.tets) {
    const auto& x = mesh.rest_positions;
    if (signed_tet_volume(x[t[0]], x[t[1]], x[t[2]], x[t[3]]) < 0.0) std::swap(t[2], t[3]);
  }
}

void finish_mesh(TetMesh& mesh, const MaterialParams& material) {
  orient_positive(mesh);
  mesh.materials = {material};
  mesh.element_material.assign(mesh.tets.size(), 0);
  mesh.body_of_vertex.assign(mesh.rest_positions.size(), 0);
  if (mesh.surface_tris.empty()) mesh.surface_tris = extract_surface(mesh.tets, mesh.rest_positions);
  if (mesh.surface_groups.empty()) {
    auto& all = mesh.surface_groups["surface"];
    for (int i = 0; i < static_cast<int>(mesh.surface_tris.size()); ++i) all.push_back(i);
  }
}

TetMesh make_grid(int nx, int ny, int nz, const std::function<Eigen::Vector3d(int, int, int)>& place) {
  TetMesh mesh;
  auto id = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) mesh.rest_positions.push_back(place(i, j, k));
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        std::array<int, 8> c;
        for (int b = 0; b < 8; ++b) c[b] = id(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
        split_hex(c, mesh.tets);
      }
  return mesh;
}

}  // namespace

TetMesh make_box_mesh(const Eigen::Vector3d& size, int nx, int ny, int nz,
                      const MaterialParams& material) {
  if (nx < 1 || ny < 1 || nz < 1) throw Error(ErrorCategory::Mesh, "box resolution must be >= 1");
  TetMesh mesh = make_grid(nx, ny, nz, [&](int i, int j, int k) {
    return Eigen::Vector3d(size.x() * (double(i) / nx - 0.5), size.y() * (double(j) / ny - 0.5),
                           size.z() * (double(k) / nz - 0.5));
  });
  finish_mesh(mesh, material);
  return mesh;
}

TetMesh make_ball_mesh(double radius, int n, const MaterialParams& material) {
  if (n < 1) throw Error(ErrorCategory::Mesh, "ball resolution must be >= 1");
  if (!(radius > 0.0)) throw Error(ErrorCategory::Mesh, "ball radius must be > 0");
  const int cells = 2 * n;
  TetMesh mesh = make_grid(cells, cells, cells, [&](int i, int j, int k) -> Eigen::Vector3d {
    const double x = double(i) / n - 1.0;
    const double y = double(j) / n - 1.0;
    const double z = double(k) / n - 1.0;
    const double x2 = x * x, y2 = y * y, z2 = z * z;
    return Eigen::Vector3d(x * std::sqrt(1.0 - y2 / 2.0 - z2 / 2.0 + y2 * z2 / 3.0),
                           y * std::sqrt(1.0 - z2 / 2.0 - x2 / 2.0 + z2 * x2 / 3.0),
                           z * std::sqrt(1.0 - x2 / 2.0 - y2 / 2.0 + x2 * y2 / 3.0)) *
           radius;
  });
  finish_mesh(mesh, material);
  return mesh;
}

TetMesh read_tet_mesh(const std::filesystem::path& path, const MaterialParams& material) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Io, "cannot open mesh file '" + path.string() + "'");
  TetMesh mesh;
  std::string group = "surface";
  std::string line;
  int lineno = 0;
  auto bad = [&](const std::string& why) {
    throw Error(ErrorCategory::Mesh,
                path.string() + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Eigen::Vector3d p;
      if (!(ls >> p.x() >> p.y() >> p.z())) bad("malformed vertex");
      mesh.rest_positions.push_back(p);
    } else if (tag == "t") {
      Tet t;
      for (int& i : t) {
        if (!(ls >> i)) bad("malformed tet");
        --i;
      }
      mesh.tets.push_back(t);
    } else if (tag == "f") {
      Tri t;
      for (int& i : t) {
        if (!(ls >> i)) bad("malformed face");
        --i;
      }
      mesh.surface_groups[group].push_back(static_cast<int>(mesh.surface_tris.size()));
      mesh.surface_tris.push_back(t);
    } else if (tag == "g") {
      if (!(ls >> group)) bad("group without a name");
    } else {
      bad("unknown record '" + tag + "'");
    }
  }
  const int nv = static_cast<int>(mesh.rest_positions.size());
  for (const auto& t : mesh.tets)
    for (int i : t)
      if (i < 0 || i >= nv) throw Error(ErrorCategory::Mesh, path.string() + ": tet index out of range");
  for (const auto& t : mesh.surface_tris)
    for (int i : t)
      if (i < 0 || i >= nv) throw Error(ErrorCategory::Mesh, path.string() + ": face index out of range");
  if (mesh.tets.empty()) throw Error(ErrorCategory::Mesh, path.string() + ": no tetrahedra");
  finish_mesh(mesh, material);
  return mesh;
}

void write_tet_mesh(const std::filesystem::path& path, const TetMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::Io, "cannot write mesh file '" + path.string() + "'");
  out.precision(17);
  for (const auto& p : mesh.rest_positions) out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  for (const auto& t : mesh.tets)
    out << "t " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << ' ' << t[3] + 1 << '\n';
  for (const auto& [name, tris] : mesh.surface_groups) {
    out << "g " << name << '\n';
    for (int i : tris) {
      const auto& t = mesh.surface_tris[i];
      out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    }
  }
}

}  // namespace fricsim
