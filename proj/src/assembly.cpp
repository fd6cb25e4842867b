#include "pmsm/assembly.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "pmsm/error.hpp"

namespace pmsm {

Materials Materials::from_spec(const MachineSpec& spec) {
  Materials m;
  m.axial_length = spec.axial_length;
  m.nu_air = 1.0 / kMu0;
  m.nu_iron = 1.0 / (kMu0 * spec.relative_permeability_iron);
  m.nu_magnet = 1.0 / (kMu0 * spec.magnet_recoil_permeability);
  m.remanence = spec.remanent_flux_density;
  return m;
}

Materials Materials::uniform(double nu, double axial_length) {
  Materials m;
  m.axial_length = axial_length;
  m.nu_air = m.nu_iron = m.nu_magnet = nu;
  return m;
}

double Materials::nu_of(Region r) const {
  switch (r) {
    case Region::StatorIron:
    case Region::RotorIron:
      return nu_iron;
    case Region::Magnet:
      return nu_magnet;
    default:
      return nu_air;  // airgap halves, coil copper, inter-magnet gaps
  }
}

double p1_gradients(const double* coords, const Triangle& tri, double b[3],
                    double c[3]) {
  const double x0 = coords[2 * tri.v[0]], y0 = coords[2 * tri.v[0] + 1];
  const double x1 = coords[2 * tri.v[1]], y1 = coords[2 * tri.v[1] + 1];
  const double x2 = coords[2 * tri.v[2]], y2 = coords[2 * tri.v[2] + 1];
  const double det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
  b[0] = (y1 - y2) / det;
  b[1] = (y2 - y0) / det;
  b[2] = (y0 - y1) / det;
  c[0] = (x2 - x1) / det;
  c[1] = (x0 - x2) / det;
  c[2] = (x1 - x0) / det;
  return 0.5 * det;
}

void element_stiffness(const double* coords, const Triangle& tri, double nu,
                       double lz, double K[3][3]) {
  double b[3], c[3];
  const double area = p1_gradients(coords, tri, b, c);
  const double s = nu / lz * area;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) K[i][j] = s * (b[i] * b[j] + c[i] * c[j]);
}

namespace {

bool part_takes(StiffnessPart part, const CoupledMesh& mesh,
                const Triangle& tri) {
  const Domain dom = mesh.node_domain[tri.v[0]];
  switch (part) {
    case StiffnessPart::RotorAll:
      return dom == Domain::Rotor;
    case StiffnessPart::StatorFixed:
      return dom == Domain::Stator && tri.region != Region::AirgapStator;
    case StiffnessPart::StatorBand:
      return tri.region == Region::AirgapStator;
  }
  return false;
}

}  // namespace

std::vector<Eigen::Triplet<double>> assemble_stiffness(
    const CoupledMesh& mesh, const std::vector<double>& coords,
    const Materials& mat, StiffnessPart part) {
  std::vector<Eigen::Triplet<double>> out;
  out.reserve(9 * mesh.tris.size() / 2);
  double K[3][3];
  for (const auto& tri : mesh.tris) {
    if (!part_takes(part, mesh, tri)) continue;
    element_stiffness(coords.data(), tri, mat.nu_of(tri.region),
                      mat.axial_length, K);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        out.emplace_back(tri.v[i], tri.v[j], K[i][j]);
  }
  return out;
}

Eigen::VectorXd assemble_uniform_current(const CoupledMesh& mesh,
                                         const std::vector<double>& coords,
                                         double current_density) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.node_count());
  double b[3], c[3];
  for (const auto& tri : mesh.tris) {
    if (tri.region != Region::Coil) continue;
    const double area = p1_gradients(coords.data(), tri, b, c);
    const double w = current_density * area / 3.0;
    for (int i = 0; i < 3; ++i) f[tri.v[i]] += w;
  }
  return f;
}

Eigen::MatrixXd winding_matrix(const CoupledMesh& mesh,
                               const MachineSpec& spec) {
  const int Qs = spec.slot_count();
  if (static_cast<int>(mesh.slot_top.size()) != Qs ||
      static_cast<int>(mesh.slot_bottom.size()) != Qs)
    fail(ErrorCode::Geometry, "mesh slot layout does not match the machine");
  const int q = spec.slots_per_pole_per_phase;

  // top-layer belt pattern: per pole, q slots of A, q of -C, q of B,
  // whole pole negated for odd poles
  auto top_of = [&](int s) {
    const int pole = s / (3 * q);
    const int g = (s % (3 * q)) / q;
    static const int phase_of[3] = {0, 2, 1};
    int sign = (g == 1) ? -1 : 1;
    if (pole % 2 == 1) sign = -sign;
    return std::pair<int, int>(phase_of[g], sign);
  };

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(mesh.node_count(), 3);
  double b[3], c[3];
  auto add_layer = [&](const std::vector<int>& elems, int phase, int sign) {
    double area = 0.0;
    for (int e : elems) area += p1_gradients(mesh.nominal.data(), mesh.tris[e], b, c);
    if (area <= 0.0) fail(ErrorCode::Geometry, "empty slot layer");
    const double scale = sign * spec.turns_per_coil / area;
    for (int e : elems) {
      const auto& tri = mesh.tris[e];
      const double w = scale * p1_gradients(mesh.nominal.data(), tri, b, c) / 3.0;
      for (int i = 0; i < 3; ++i) X(tri.v[i], phase) += w;
    }
  };

  for (int s = 0; s < Qs; ++s) {
    const auto [ph_t, sg_t] = top_of(s);
    add_layer(mesh.slot_top[s], ph_t, sg_t);
    const int src = ((s - spec.coil_span_slots) % Qs + Qs) % Qs;
    const auto [ph_b, sg_b] = top_of(src);
    add_layer(mesh.slot_bottom[s], ph_b, -sg_b);
  }
  return X;
}

Eigen::VectorXd assemble_magnet_source(const CoupledMesh& mesh,
                                       const Materials& mat) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.node_count());
  double b[3], c[3];
  for (std::size_t m = 0; m < mesh.magnet_elements.size(); ++m) {
    const double pol = mesh.magnet_polarity[m];
    for (int e : mesh.magnet_elements[m]) {
      const auto& tri = mesh.tris[e];
      const double area = p1_gradients(mesh.nodes.data(), tri, b, c);
      // radial unit vector at the centroid (rotor material frame)
      double cx = 0.0, cy = 0.0;
      for (int i = 0; i < 3; ++i) {
        cx += mesh.nodes[2 * tri.v[i]];
        cy += mesh.nodes[2 * tri.v[i] + 1];
      }
      const double rn = std::hypot(cx, cy);
      const double mx = pol * cx / rn, my = pol * cy / rn;
      const double s = mat.nu_magnet * mat.remanence * area;
      for (int i = 0; i < 3; ++i) f[tri.v[i]] += s * (mx * c[i] - my * b[i]);
    }
  }
  return f;
}

double magnetic_energy(const CoupledMesh& mesh,
                       const std::vector<double>& coords, const Materials& mat,
                       const Eigen::VectorXd& a_nodes) {
  double W = 0.0;
  double b[3], c[3];
  for (const auto& tri : mesh.tris) {
    const double area = p1_gradients(coords.data(), tri, b, c);
    double gx = 0.0, gy = 0.0;
    for (int i = 0; i < 3; ++i) {
      gx += b[i] * a_nodes[tri.v[i]];
      gy += c[i] * a_nodes[tri.v[i]];
    }
    W += 0.5 * mat.nu_of(tri.region) / mat.axial_length * (gx * gx + gy * gy) *
         area;
  }
  return W;
}

void element_flux_density(const CoupledMesh& mesh,
                          const std::vector<double>& coords, double lz,
                          const Eigen::VectorXd& a_nodes, int t, double* bx,
                          double* by) {
  double b[3], c[3];
  const auto& tri = mesh.tris[t];
  p1_gradients(coords.data(), tri, b, c);
  double gx = 0.0, gy = 0.0;
  for (int i = 0; i < 3; ++i) {
    gx += b[i] * a_nodes[tri.v[i]];
    gy += c[i] * a_nodes[tri.v[i]];
  }
  *bx = gy / lz;
  *by = -gx / lz;
}

void write_coo_text(const std::vector<Eigen::Triplet<double>>& triplets,
                    int rows, int cols, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::Io, "cannot open COO output file: " + path);
  os << rows << " " << cols << " " << triplets.size() << "\n";
  char buf[80];
  for (const auto& t : triplets) {
    std::snprintf(buf, sizeof buf, "%d %d %.17g\n", t.row(), t.col(),
                  t.value());
    os << buf;
  }
  if (!os.good()) fail(ErrorCode::Io, "short write to COO file: " + path);
}

}  // namespace pmsm
