#include "pmsm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pmsm/error.hpp"

namespace pmsm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// One radial zone: [r0, r1] split into `intervals` equal rings, every
// interval carrying the same region tag (refined by the angular rule).
struct Zone {
  double r0, r1;
  int intervals;  // at refinement 0
};

void append_ring_radii(const Zone& z, int scale, bool include_start,
                       std::vector<double>* radii) {
  const int n = z.intervals * scale;
  for (int k = include_start ? 0 : 1; k <= n; ++k)
    radii->push_back(z.r0 + (z.r1 - z.r0) * static_cast<double>(k) / n);
}

double cross2(double ax, double ay, double bx, double by) {
  return ax * by - ay * bx;
}

double point_segment_distance(double px, double py, double ax, double ay,
                              double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double qx = ax + t * dx, qy = ay + t * dy;
  return std::hypot(px - qx, py - qy);
}

std::uint64_t fnv1a_bytes(const std::string& s) { return config_hash(s); }

}  // namespace

double CoupledMesh::signed_area(int t) const {
  const auto& v = tris[t].v;
  const double x0 = nodes[2 * v[0]], y0 = nodes[2 * v[0] + 1];
  const double x1 = nodes[2 * v[1]], y1 = nodes[2 * v[1] + 1];
  const double x2 = nodes[2 * v[2]], y2 = nodes[2 * v[2] + 1];
  return 0.5 * cross2(x1 - x0, y1 - y0, x2 - x0, y2 - y0);
}

void CoupledMesh::morph_stator_band(double rotor_angle,
                                    std::vector<double>& out) const {
  out = nodes;
  if (ecc.displacement == 0.0) return;
  const double dir = ecc.direction + rotor_angle;
  const double ux = ecc.displacement * std::cos(dir);
  const double uy = ecc.displacement * std::sin(dir);
  const int n = node_count();
  for (int i = 0; i < n; ++i) {
    if (node_domain[i] != Domain::Stator || blend[i] == 0.0) continue;
    out[2 * i] = nominal[2 * i] + blend[i] * ux;
    out[2 * i + 1] = nominal[2 * i + 1] + blend[i] * uy;
  }
}

CoupledMesh build_machine_mesh(const MachineSpec& spec, int refinement) {
  spec.validate();
  if (refinement < 0 || refinement > 6)
    fail(ErrorCode::Mesh, "refinement out of range [0,6]");

  const int scale = 1 << refinement;
  const int c0 = spec.cells_per_slot_pitch;  // base cells per slot pitch
  const int Qs = spec.slot_count();
  const int M0 = Qs * c0;      // base angular cells
  const int M = M0 * scale;    // fine angular cells (= interface nodes)
  if (M % 3 != 0) fail(ErrorCode::Mesh, "interface count not divisible by 3");

  const double r_sh = spec.shaft_radius;
  const double r_mi = spec.rotor_radius - spec.magnet_thickness;
  const double r_rt = spec.rotor_radius;
  const double r_bo = spec.stator_inner_radius;
  const double r_c = 0.5 * (r_rt + r_bo);  // contour radius
  const double r_so = spec.stator_inner_radius + spec.slot_depth;
  const double r_out = spec.stator_outer_radius;
  const double gap = spec.mean_airgap();

  // angular windows, snapped on the base grid so every refinement meshes
  // the same geometry
  int w_slot = static_cast<int>(std::llround(spec.slot_opening_fraction * c0));
  w_slot = std::clamp(w_slot, 1, c0 - 1);
  const int t_slot = (c0 - w_slot) / 2;

  const int pole_cells = M0 / (2 * spec.pole_pairs);
  int w_mag =
      2 * static_cast<int>(std::llround(spec.magnet_arc_fraction * pole_cells / 2.0));
  w_mag = std::clamp(w_mag, 2, pole_cells);
  const int t_mag = (pole_cells - w_mag) / 2;

  const std::vector<Zone> rotor_zones = {
      {r_sh, r_mi, 8}, {r_mi, r_rt, 4}, {r_rt, r_c, 6}};
  const std::vector<Zone> stator_zones = {
      {r_c, r_bo, 6}, {r_bo, r_so, 8}, {r_so, r_out, 4}};

  std::vector<double> rr;  // rotor ring radii
  rr.push_back(r_sh);
  for (const auto& z : rotor_zones) append_ring_radii(z, scale, false, &rr);
  std::vector<double> rs;  // stator ring radii
  rs.push_back(r_c);
  for (const auto& z : stator_zones) append_ring_radii(z, scale, false, &rs);

  const int nrr = static_cast<int>(rr.size());
  const int nrs = static_cast<int>(rs.size());

  CoupledMesh mesh;
  mesh.interface_count = M;
  mesh.contour_radius = r_c;
  mesh.mean_airgap = gap;
  const int n_nodes = (nrr + nrs) * M;
  mesh.nodes.resize(2 * n_nodes);
  mesh.blend.resize(n_nodes);
  mesh.node_domain.resize(n_nodes);

  std::vector<double> ca(M), sa(M);
  for (int j = 0; j < M; ++j) {
    ca[j] = std::cos(kTwoPi * j / M);
    sa[j] = std::sin(kTwoPi * j / M);
  }

  auto place_ring = [&](int ring, double r, Domain dom) {
    for (int j = 0; j < M; ++j) {
      const int id = ring * M + j;
      mesh.nodes[2 * id] = r * ca[j];
      mesh.nodes[2 * id + 1] = r * sa[j];
      mesh.node_domain[id] = dom;
      mesh.blend[id] = std::clamp((r_bo - r) / gap, 0.0, 1.0);
    }
  };
  for (int i = 0; i < nrr; ++i) place_ring(i, rr[i], Domain::Rotor);
  for (int i = 0; i < nrs; ++i) place_ring(nrr + i, rs[i], Domain::Stator);
  mesh.nominal = mesh.nodes;

  auto ring_ids = [&](int ring) {
    std::vector<int> ids(M);
    for (int j = 0; j < M; ++j) ids[j] = ring * M + j;
    return ids;
  };
  mesh.contour_rotor = ring_ids(nrr - 1);
  mesh.contour_stator = ring_ids(nrr);
  const int mag_top_ring = (rotor_zones[0].intervals + rotor_zones[1].intervals) * scale;
  mesh.rotor_surface = ring_ids(mag_top_ring);
  mesh.stator_bore = ring_ids(nrr + stator_zones[0].intervals * scale);

  mesh.dirichlet = ring_ids(0);
  const auto outer = ring_ids(nrr + nrs - 1);
  mesh.dirichlet.insert(mesh.dirichlet.end(), outer.begin(), outer.end());

  // region of an angular base cell inside the rotor magnet zone
  auto magnet_pole = [&](int cb) -> int {
    const int p = cb / pole_cells;
    const int off = cb % pole_cells;
    return (off >= t_mag && off < t_mag + w_mag) ? p : -1;
  };
  auto slot_of = [&](int cb) -> int {
    const int off = cb % c0;
    return (off >= t_slot && off < t_slot + w_slot) ? cb / c0 : -1;
  };

  const int n_poles = 2 * spec.pole_pairs;
  mesh.slot_top.assign(Qs, {});
  mesh.slot_bottom.assign(Qs, {});
  mesh.magnet_elements.assign(n_poles, {});
  mesh.magnet_polarity.resize(n_poles);
  for (int m = 0; m < n_poles; ++m) mesh.magnet_polarity[m] = (m % 2 == 0) ? 1 : -1;

  mesh.tris.reserve(2 * static_cast<std::size_t>(nrr + nrs - 2) * M);
  // interval index -> (region, payload); rotor intervals then stator
  auto emit_band = [&](int ring_lo, int cell_j, Region reg, int payload) {
    const int jn = (cell_j + 1) % M;
    const int n00 = ring_lo * M + cell_j, n01 = ring_lo * M + jn;
    const int n10 = (ring_lo + 1) * M + cell_j, n11 = (ring_lo + 1) * M + jn;
    mesh.tris.push_back({{n00, n11, n01}, reg, payload});
    mesh.tris.push_back({{n00, n10, n11}, reg, payload});
  };

  const int core_iv = rotor_zones[0].intervals * scale;
  const int mag_iv = rotor_zones[1].intervals * scale;
  const int sband_iv = stator_zones[0].intervals * scale;
  const int slot_iv = stator_zones[1].intervals * scale;

  for (int i = 0; i + 1 < nrr; ++i) {
    for (int j = 0; j < M; ++j) {
      const int cb = j / scale;
      Region reg;
      int payload = -1;
      if (i < core_iv) {
        reg = Region::RotorIron;
      } else if (i < core_iv + mag_iv) {
        const int p = magnet_pole(cb);
        reg = p >= 0 ? Region::Magnet : Region::Air;
        payload = p;
      } else {
        reg = Region::AirgapRotor;
      }
      const int e0 = static_cast<int>(mesh.tris.size());
      emit_band(i, j, reg, payload);
      if (reg == Region::Magnet) {
        mesh.magnet_elements[payload].push_back(e0);
        mesh.magnet_elements[payload].push_back(e0 + 1);
      }
    }
  }
  for (int i = 0; i + 1 < nrs; ++i) {
    for (int j = 0; j < M; ++j) {
      const int cb = j / scale;
      Region reg;
      int payload = -1;
      if (i < sband_iv) {
        reg = Region::AirgapStator;
      } else if (i < sband_iv + slot_iv) {
        const int s = slot_of(cb);
        reg = s >= 0 ? Region::Coil : Region::StatorIron;
        payload = s;
      } else {
        reg = Region::StatorIron;
      }
      const int e0 = static_cast<int>(mesh.tris.size());
      emit_band(nrr + i, j, reg, payload);
      if (reg == Region::Coil) {
        const bool top = (i - sband_iv) < slot_iv / 2;  // nearer the gap
        auto& lst = top ? mesh.slot_top[payload] : mesh.slot_bottom[payload];
        lst.push_back(e0);
        lst.push_back(e0 + 1);
      }
    }
  }

  // free-DoF numbering (per domain, node order)
  mesh.dof.assign(n_nodes, -1);
  std::vector<char> is_dirichlet(n_nodes, 0);
  for (int id : mesh.dirichlet) is_dirichlet[id] = 1;
  for (int id = 0; id < n_nodes; ++id) {
    if (is_dirichlet[id]) continue;
    if (mesh.node_domain[id] == Domain::Stator)
      mesh.dof[id] = mesh.n_stator_dofs++;
    else
      mesh.dof[id] = mesh.n_rotor_dofs++;
  }

  for (std::size_t t = 0; t < mesh.tris.size(); ++t)
    if (mesh.signed_area(static_cast<int>(t)) <= 0.0)
      fail(ErrorCode::Mesh, "non-positive element area in machine mesh");
  return mesh;
}

CoupledMesh build_annulus_mesh(const AnnulusSpec& spec, int refinement) {
  if (spec.inner_radius <= 0 || spec.outer_radius <= spec.inner_radius)
    fail(ErrorCode::Geometry, "annulus radii must satisfy 0 < inner < outer");
  if (spec.angular_count < 8 || spec.radial_count < 2)
    fail(ErrorCode::Mesh, "annulus resolution too coarse");
  if (refinement < 0 || refinement > 6)
    fail(ErrorCode::Mesh, "refinement out of range [0,6]");

  const int scale = 1 << refinement;
  const int M = spec.angular_count * scale;
  const int nr = spec.radial_count * scale;  // intervals per domain
  const double r_in = spec.inner_radius;
  const double r_out = spec.outer_radius;
  const double r_c = 0.5 * (r_in + r_out);

  CoupledMesh mesh;
  mesh.interface_count = M;
  mesh.contour_radius = r_c;
  mesh.mean_airgap = 0.0;

  const int nrr = nr + 1, nrs = nr + 1;
  const int n_nodes = (nrr + nrs) * M;
  mesh.nodes.resize(2 * n_nodes);
  mesh.blend.assign(n_nodes, 0.0);
  mesh.node_domain.resize(n_nodes);

  std::vector<double> ca(M), sa(M);
  for (int j = 0; j < M; ++j) {
    ca[j] = std::cos(kTwoPi * j / M);
    sa[j] = std::sin(kTwoPi * j / M);
  }
  auto radius_of = [&](int ring) {
    if (ring < nrr) return r_in + (r_c - r_in) * ring / static_cast<double>(nr);
    return r_c + (r_out - r_c) * (ring - nrr) / static_cast<double>(nr);
  };
  for (int ring = 0; ring < nrr + nrs; ++ring) {
    const double r = radius_of(ring);
    for (int j = 0; j < M; ++j) {
      const int id = ring * M + j;
      mesh.nodes[2 * id] = r * ca[j];
      mesh.nodes[2 * id + 1] = r * sa[j];
      mesh.node_domain[id] = ring < nrr ? Domain::Rotor : Domain::Stator;
    }
  }
  mesh.nominal = mesh.nodes;

  auto ring_ids = [&](int ring) {
    std::vector<int> ids(M);
    for (int j = 0; j < M; ++j) ids[j] = ring * M + j;
    return ids;
  };
  mesh.contour_rotor = ring_ids(nrr - 1);
  mesh.contour_stator = ring_ids(nrr);
  mesh.rotor_surface = mesh.contour_rotor;
  mesh.stator_bore = mesh.contour_stator;
  mesh.dirichlet = ring_ids(nrr + nrs - 1);

  // uniform source band: innermost quarter of the inner domain
  const int src_iv = std::max(1, nr / 4);
  for (int i = 0; i + 1 < nrr + nrs; ++i) {
    if (i == nrr - 1) continue;  // no elements across the duplicated contour
    const bool src = i < src_iv;
    for (int j = 0; j < M; ++j) {
      const int jn = (j + 1) % M;
      const int n00 = i * M + j, n01 = i * M + jn;
      const int n10 = (i + 1) * M + j, n11 = (i + 1) * M + jn;
      const Region reg = src ? Region::Coil : Region::Air;
      const int payload = src ? 0 : -1;
      mesh.tris.push_back({{n00, n11, n01}, reg, payload});
      mesh.tris.push_back({{n00, n10, n11}, reg, payload});
    }
  }
  mesh.slot_top.assign(1, {});
  mesh.slot_bottom.assign(1, {});

  mesh.dof.assign(n_nodes, -1);
  std::vector<char> is_dirichlet(n_nodes, 0);
  for (int id : mesh.dirichlet) is_dirichlet[id] = 1;
  for (int id = 0; id < n_nodes; ++id) {
    if (is_dirichlet[id]) continue;
    if (mesh.node_domain[id] == Domain::Stator)
      mesh.dof[id] = mesh.n_stator_dofs++;
    else
      mesh.dof[id] = mesh.n_rotor_dofs++;
  }

  for (std::size_t t = 0; t < mesh.tris.size(); ++t)
    if (mesh.signed_area(static_cast<int>(t)) <= 0.0)
      fail(ErrorCode::Mesh, "non-positive element area in annulus mesh");
  return mesh;
}

CoupledMesh apply_eccentricity(const CoupledMesh& mesh,
                               const EccentricityState& ecc) {
  CoupledMesh out = mesh;
  out.ecc = ecc;
  if (ecc.displacement == 0.0) {
    out.nodes = out.nominal;
    return out;
  }
  if (mesh.mean_airgap <= 0.0)
    fail(ErrorCode::Geometry, "mesh has no airgap band to displace");
  ecc.eps(mesh.mean_airgap);  // range check

  const double ux = ecc.displacement * std::cos(ecc.direction);
  const double uy = ecc.displacement * std::sin(ecc.direction);
  const int n = out.node_count();
  out.nodes = out.nominal;
  for (int i = 0; i < n; ++i) {
    if (out.node_domain[i] != Domain::Rotor) continue;
    out.nodes[2 * i] = out.nominal[2 * i] + out.blend[i] * ux;
    out.nodes[2 * i + 1] = out.nominal[2 * i + 1] + out.blend[i] * uy;
  }
  for (std::size_t t = 0; t < out.tris.size(); ++t)
    if (out.node_domain[out.tris[t].v[0]] == Domain::Rotor &&
        out.signed_area(static_cast<int>(t)) <= 0.0)
      fail(ErrorCode::Mesh, "eccentricity morph inverted a rotor element");

  // the stator-side morph has the same radial compression; probe it once
  std::vector<double> probe;
  out.morph_stator_band(0.0, probe);
  std::swap(out.nodes, probe);
  for (std::size_t t = 0; t < out.tris.size(); ++t)
    if (out.node_domain[out.tris[t].v[0]] == Domain::Stator &&
        out.signed_area(static_cast<int>(t)) <= 0.0)
      fail(ErrorCode::Mesh, "eccentricity morph inverted a stator element");
  std::swap(out.nodes, probe);
  return out;
}

std::vector<double> airgap_profile(const CoupledMesh& mesh) {
  const auto& surf = mesh.rotor_surface;
  const int ns = static_cast<int>(surf.size());
  std::vector<double> prof;
  prof.reserve(mesh.stator_bore.size());
  for (int id : mesh.stator_bore) {
    const double px = mesh.nominal[2 * id], py = mesh.nominal[2 * id + 1];
    double best = 1e300;
    for (int k = 0; k < ns; ++k) {
      const int a = surf[k], b = surf[(k + 1) % ns];
      best = std::min(best, point_segment_distance(
                                px, py, mesh.nodes[2 * a], mesh.nodes[2 * a + 1],
                                mesh.nodes[2 * b], mesh.nodes[2 * b + 1]));
    }
    prof.push_back(best);
  }
  return prof;
}

namespace {

void dump_mesh(const CoupledMesh& mesh, std::ostream& os) {
  char buf[128];
  os << "nodes " << mesh.node_count() << "\n";
  for (int i = 0; i < mesh.node_count(); ++i) {
    std::snprintf(buf, sizeof buf, "%d %.17g %.17g %d %.17g\n", i,
                  mesh.nodes[2 * i], mesh.nodes[2 * i + 1],
                  static_cast<int>(mesh.node_domain[i]), mesh.blend[i]);
    os << buf;
  }
  os << "elements " << mesh.tris.size() << "\n";
  for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
    const auto& tr = mesh.tris[t];
    std::snprintf(buf, sizeof buf, "%zu %d %d %d %d %d\n", t, tr.v[0], tr.v[1],
                  tr.v[2], static_cast<int>(tr.region), tr.payload);
    os << buf;
  }
  os << "dirichlet " << mesh.dirichlet.size() << "\n";
  for (int id : mesh.dirichlet) os << id << "\n";
}

}  // namespace

void write_mesh_text(const CoupledMesh& mesh, const std::string& path,
                     const std::string& header) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::Io, "cannot open mesh output file: " + path);
  if (!header.empty()) os << "# " << header << "\n";
  dump_mesh(mesh, os);
  if (!os.good()) fail(ErrorCode::Io, "short write to mesh file: " + path);
}

std::string mesh_fingerprint(const CoupledMesh& mesh) {
  std::ostringstream os;
  dump_mesh(mesh, os);
  os << "dofs " << mesh.n_stator_dofs << " " << mesh.n_rotor_dofs << "\n";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a_bytes(os.str())));
  return buf;
}

}  // namespace pmsm
