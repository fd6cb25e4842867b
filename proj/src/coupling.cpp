#include "pmsm/coupling.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>

#include "pmsm/error.hpp"

namespace pmsm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// node-indexed -> free-dof-indexed triplets of one domain
std::vector<Eigen::Triplet<double>> to_dofs(
    const CoupledMesh& mesh, const std::vector<Eigen::Triplet<double>>& in) {
  std::vector<Eigen::Triplet<double>> out;
  out.reserve(in.size());
  for (const auto& t : in) {
    const int r = mesh.dof[t.row()], c = mesh.dof[t.col()];
    if (r >= 0 && c >= 0) out.emplace_back(r, c, t.value());
  }
  return out;
}

Eigen::VectorXd restrict_to(const CoupledMesh& mesh, Domain dom, int n_dofs,
                            const Eigen::VectorXd& f_nodes) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n_dofs);
  for (int id = 0; id < mesh.node_count(); ++id)
    if (mesh.node_domain[id] == dom && mesh.dof[id] >= 0)
      f[mesh.dof[id]] += f_nodes[id];
  return f;
}

}  // namespace

RotatingSolver::RotatingSolver(const CoupledMesh& mesh, const Materials& mat)
    : mesh_(&mesh), mat_(mat) {
  f_const_ = Eigen::VectorXd::Zero(mesh.node_count());
  Ks_fixed_ = to_dofs(mesh, assemble_stiffness(mesh, mesh.nodes, mat,
                                               StiffnessPart::StatorFixed));
  Kr_ = to_dofs(mesh, assemble_stiffness(mesh, mesh.nodes, mat,
                                         StiffnessPart::RotorAll));

  const int M = mesh.interface_count;
  stator_contour_dof_.resize(M);
  rotor_contour_dof_.resize(M);
  rotor_contour_index_.assign(mesh.n_rotor_dofs, -1);
  for (int j = 0; j < M; ++j) {
    stator_contour_dof_[j] = mesh.dof[mesh.contour_stator[j]];
    rotor_contour_dof_[j] = mesh.dof[mesh.contour_rotor[j]];
    if (stator_contour_dof_[j] < 0 || rotor_contour_dof_[j] < 0)
      fail(ErrorCode::Solver, "contour nodes must be free dofs");
    rotor_contour_index_[rotor_contour_dof_[j]] = j;
  }
  rotor_interior_.assign(mesh.n_rotor_dofs, -1);
  for (int d = 0; d < mesh.n_rotor_dofs; ++d)
    if (rotor_contour_index_[d] < 0) rotor_interior_[d] = n_interior_++;
}

void RotatingSolver::set_winding(const Eigen::MatrixXd& X) {
  if (X.rows() != mesh_->node_count() || X.cols() != 3)
    fail(ErrorCode::Solver, "winding matrix has the wrong shape");
  X_ = X;
}

void RotatingSolver::set_constant_source(const Eigen::VectorXd& f_nodes) {
  if (f_nodes.size() != mesh_->node_count())
    fail(ErrorCode::Solver, "source vector has the wrong size");
  f_const_ = f_nodes;
}

double RotatingSolver::rotor_angle(int k) const {
  const int M = mesh_->interface_count;
  const int shift = ((3 * k) % M + M) % M;
  return kTwoPi * shift / M;
}

Eigen::VectorXd RotatingSolver::source_nodes(
    const Eigen::Vector3d& currents) const {
  Eigen::VectorXd f = f_const_;
  if (X_.size() > 0) f += X_ * currents;
  return f;
}

void RotatingSolver::finish(const std::vector<double>& coords,
                            StepResult* res) const {
  const CoupledMesh& mesh = *mesh_;
  res->energy = magnetic_energy(mesh, coords, mat_, res->a);
  res->flux.setZero();
  if (X_.size() > 0) res->flux = X_.transpose() * res->a;

  res->torque_band = 0.0;
  if (mesh.mean_airgap > 0.0) {
    const double dr = mesh.mean_airgap;  // integral spans the whole gap
    const double lz = mat_.axial_length;
    double acc = 0.0;
    double b[3], c[3];
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
      const auto& tri = mesh.tris[t];
      if (tri.region != Region::AirgapStator &&
          tri.region != Region::AirgapRotor)
        continue;
      const double area = p1_gradients(coords.data(), tri, b, c);
      double gx = 0.0, gy = 0.0, cx = 0.0, cy = 0.0;
      for (int i = 0; i < 3; ++i) {
        gx += b[i] * res->a[tri.v[i]];
        gy += c[i] * res->a[tri.v[i]];
        cx += coords[2 * tri.v[i]];
        cy += coords[2 * tri.v[i] + 1];
      }
      cx /= 3.0;
      cy /= 3.0;
      const double bx = gy / lz, by = -gx / lz;
      const double rc = std::hypot(cx, cy);
      const double br = (bx * cx + by * cy) / rc;
      const double bt = (by * cx - bx * cy) / rc;
      acc += area * rc * br * bt;
    }
    res->torque_band = lz / (kMu0 * dr) * acc;
  }
}

StepResult RotatingSolver::solve_step(int k,
                                      const Eigen::Vector3d& currents) const {
  const CoupledMesh& mesh = *mesh_;
  const int M = mesh.interface_count;
  const int shift = ((3 * k) % M + M) % M;
  const int n_s = mesh.n_stator_dofs;
  const int n_m = n_s + n_interior_;

  std::vector<double> coords;
  mesh.morph_stator_band(rotor_angle(k), coords);
  const auto band = to_dofs(
      mesh, assemble_stiffness(mesh, coords, mat_, StiffnessPart::StatorBand));

  // rotor dof -> merged index under the step-k contour pairing
  auto merged_of = [&](int d) {
    const int i = rotor_contour_index_[d];
    if (i >= 0) return stator_contour_dof_[(i + shift) % M];
    return n_s + rotor_interior_[d];
  };

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(Ks_fixed_.size() + band.size() + Kr_.size());
  trip.insert(trip.end(), Ks_fixed_.begin(), Ks_fixed_.end());
  trip.insert(trip.end(), band.begin(), band.end());
  for (const auto& t : Kr_)
    trip.emplace_back(merged_of(t.row()), merged_of(t.col()), t.value());

  Eigen::SparseMatrix<double> A(n_m, n_m);
  A.setFromTriplets(trip.begin(), trip.end());

  const Eigen::VectorXd f_nodes = source_nodes(currents);
  const Eigen::VectorXd f_s = restrict_to(mesh, Domain::Stator, n_s, f_nodes);
  const Eigen::VectorXd f_r =
      restrict_to(mesh, Domain::Rotor, mesh.n_rotor_dofs, f_nodes);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_m);
  rhs.head(n_s) = f_s;
  for (int d = 0; d < mesh.n_rotor_dofs; ++d) rhs[merged_of(d)] += f_r[d];

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success)
    fail(ErrorCode::Solver, "LDLT factorization of the merged system failed");
  const Eigen::VectorXd y = ldlt.solve(rhs);

  Eigen::VectorXd x_s = y.head(n_s);
  Eigen::VectorXd x_r(mesh.n_rotor_dofs);
  for (int d = 0; d < mesh.n_rotor_dofs; ++d) x_r[d] = y[merged_of(d)];

  StepResult res;
  res.a = Eigen::VectorXd::Zero(mesh.node_count());
  for (int id = 0; id < mesh.node_count(); ++id) {
    if (mesh.dof[id] < 0) continue;
    res.a[id] = mesh.node_domain[id] == Domain::Stator ? x_s[mesh.dof[id]]
                                                       : x_r[mesh.dof[id]];
  }

  // lambda from the stator-side residual; the rotor side must agree
  Eigen::VectorXd Ksx = Eigen::VectorXd::Zero(n_s);
  for (const auto& t : Ks_fixed_) Ksx[t.row()] += t.value() * x_s[t.col()];
  for (const auto& t : band) Ksx[t.row()] += t.value() * x_s[t.col()];
  Eigen::VectorXd Krx = Eigen::VectorXd::Zero(mesh.n_rotor_dofs);
  for (const auto& t : Kr_) Krx[t.row()] += t.value() * x_r[t.col()];

  res.lambda.resize(M);
  double mismatch = 0.0, lscale = 0.0;
  for (int j = 0; j < M; ++j) {
    const int i = ((j - shift) % M + M) % M;  // rotor partner of stator j
    const double from_s = f_s[stator_contour_dof_[j]] - Ksx[stator_contour_dof_[j]];
    const double from_r = Krx[rotor_contour_dof_[i]] - f_r[rotor_contour_dof_[i]];
    res.lambda[j] = from_s;
    mismatch = std::max(mismatch, std::abs(from_s - from_r));
    lscale = std::max({lscale, std::abs(from_s), std::abs(from_r)});
  }
  res.lambda_residual = mismatch / std::max(lscale, 1e-300);

  finish(coords, &res);
  return res;
}

StepResult RotatingSolver::solve_step_block(
    int k, const Eigen::Vector3d& currents) const {
  const CoupledMesh& mesh = *mesh_;
  const int M = mesh.interface_count;
  const int shift = ((3 * k) % M + M) % M;
  const int n_s = mesh.n_stator_dofs;
  const int n_r = mesh.n_rotor_dofs;
  const int n = n_s + n_r + M;

  std::vector<double> coords;
  mesh.morph_stator_band(rotor_angle(k), coords);
  const auto band = to_dofs(
      mesh, assemble_stiffness(mesh, coords, mat_, StiffnessPart::StatorBand));

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(Ks_fixed_.size() + band.size() + Kr_.size() + 4 * M);
  trip.insert(trip.end(), Ks_fixed_.begin(), Ks_fixed_.end());
  trip.insert(trip.end(), band.begin(), band.end());
  for (const auto& t : Kr_)
    trip.emplace_back(n_s + t.row(), n_s + t.col(), t.value());
  for (int j = 0; j < M; ++j) {
    const int i = ((j - shift) % M + M) % M;
    const int row = n_s + n_r + j;
    trip.emplace_back(row, stator_contour_dof_[j], 1.0);
    trip.emplace_back(stator_contour_dof_[j], row, 1.0);
    trip.emplace_back(row, n_s + rotor_contour_dof_[i], -1.0);
    trip.emplace_back(n_s + rotor_contour_dof_[i], row, -1.0);
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());

  const Eigen::VectorXd f_nodes = source_nodes(currents);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs.head(n_s) = restrict_to(mesh, Domain::Stator, n_s, f_nodes);
  rhs.segment(n_s, n_r) = restrict_to(mesh, Domain::Rotor, n_r, f_nodes);

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
  if (lu.info() != Eigen::Success)
    fail(ErrorCode::Solver, "LU factorization of the saddle system failed");
  const Eigen::VectorXd z = lu.solve(rhs);

  StepResult res;
  res.a = Eigen::VectorXd::Zero(mesh.node_count());
  for (int id = 0; id < mesh.node_count(); ++id) {
    if (mesh.dof[id] < 0) continue;
    res.a[id] = mesh.node_domain[id] == Domain::Stator
                    ? z[mesh.dof[id]]
                    : z[n_s + mesh.dof[id]];
  }
  res.lambda = z.tail(M);
  res.lambda_residual = (A * z - rhs).cwiseAbs().maxCoeff() /
                        std::max(rhs.cwiseAbs().maxCoeff(), 1e-300);
  finish(coords, &res);
  return res;
}

Eigen::Vector3d phase_currents(const MachineSpec& spec, int k, int steps) {
  const double theta_e =
      spec.pole_pairs * kTwoPi * static_cast<double>(k) / steps;
  Eigen::Vector3d i;
  for (int p = 0; p < 3; ++p)
    i[p] = spec.phase_current_amplitude *
           std::cos(theta_e + spec.current_angle - kTwoPi * p / 3.0);
  return i;
}

PeriodRaw run_period(const CoupledMesh& mesh, const MachineSpec& spec,
                     std::vector<Eigen::VectorXd>* store_solutions) {
  const Materials mat = Materials::from_spec(spec);
  RotatingSolver solver(mesh, mat);
  solver.set_winding(winding_matrix(mesh, spec));
  solver.set_constant_source(assemble_magnet_source(mesh, mat));

  const int S = solver.steps_per_period();
  PeriodRaw raw;
  raw.omega_m = spec.omega_m();
  raw.dt = kTwoPi / raw.omega_m / S;
  raw.energy.resize(S);
  raw.torque_band.resize(S);
  raw.currents.resize(S);
  raw.flux.resize(S);
  if (store_solutions) store_solutions->clear();

  for (int k = 0; k < S; ++k) {
    const Eigen::Vector3d cur = phase_currents(spec, k, S);
    StepResult res = solver.solve_step(k, cur);
    raw.energy[k] = res.energy;
    raw.torque_band[k] = res.torque_band;
    for (int p = 0; p < 3; ++p) {
      raw.currents[k][p] = cur[p];
      raw.flux[k][p] = res.flux[p];
    }
    raw.max_lambda_residual =
        std::max(raw.max_lambda_residual, res.lambda_residual);
    if (store_solutions) store_solutions->push_back(std::move(res.a));
  }
  return raw;
}

}  // namespace pmsm
