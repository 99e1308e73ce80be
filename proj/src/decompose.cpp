// Copyright 2026 The mpsprep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Two-qubit synthesis in the magic basis. A unitary U in SU(4) is written as
// K1 * C * K2 with K1, K2 local and C a fixed CNOT skeleton whose rotation
// angles carry the nonlocal content. The locals are found by diagonalizing
// the symmetric unitaries B^dag U B (B^dag U B)^T of U and C simultaneously.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "mpsprep/circuit.hpp"

namespace mpsprep {

namespace {

using Mat4d = Eigen::Matrix4d;
using std::numbers::pi;

constexpr std::array<double, 3> kMixRatios = {0.6180339887, 1.3247179572, 0.377};

MatC magic_basis() {
  const cplx i(0, 1);
  MatC b(4, 4);
  b << 1, i, 0, 0,
       0, 0, i, 1,
       0, 0, i, -1,
       1, -i, 0, 0;
  return b / std::sqrt(2.0);
}

MatC cnot01() { return cnot_matrix(); }
MatC cnot10() { return swap_qubits(cnot_matrix()); }

MatC to_su4(const MatC& u) { return u / std::pow(u.determinant(), 0.25); }

struct RealDiag {
  Mat4d p;
  VecC d;
};

// Jacobi sweeps that jointly diagonalize the commuting real symmetric pair
// (a, b), accumulating the rotations into p. Robust to near-degenerate
// spectra where a single eigensolver mixes eigenvectors.
void joint_jacobi(Mat4d& a, Mat4d& b, Mat4d& p) {
  for (int sweep = 0; sweep < 30; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) off = std::max({off, std::abs(a(i, j)), std::abs(b(i, j))});
    if (off < 1e-15) return;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
        for (const Mat4d* m : {&a, &b}) {
          Eigen::Vector2d v((*m)(i, j), -0.5 * ((*m)(i, i) - (*m)(j, j)));
          g += v * v.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(g);
        Eigen::Vector2d u = es.eigenvectors().col(0);
        double th = 0.5 * std::atan2(u(1), u(0));
        double c = std::cos(th), s = std::sin(th);
        Mat4d r = Mat4d::Identity();
        r(i, i) = c;
        r(j, i) = s;
        r(i, j) = -s;
        r(j, j) = c;
        a = (r.transpose() * a * r).eval();
        b = (r.transpose() * b * r).eval();
        p = (p * r).eval();
      }
  }
}

// Real orthogonal P (det +1) with P^T M P diagonal, for a symmetric unitary M.
// Re M and Im M commute, so a generic real combination separates them.
bool real_diagonalize(const MatC& m, int start, RealDiag& out) {
  for (size_t t = 0; t < kMixRatios.size(); ++t) {
    double r = kMixRatios[(static_cast<size_t>(start) + t) % kMixRatios.size()];
    Mat4d re = 0.5 * (m.real() + m.real().transpose());
    Mat4d im = 0.5 * (m.imag() + m.imag().transpose());
    Eigen::SelfAdjointEigenSolver<Mat4d> es(re + r * im);
    Mat4d p = es.eigenvectors();
    Mat4d a = p.transpose() * re * p, b = p.transpose() * im * p;
    joint_jacobi(a, b, p);
    MatC pc = p.cast<cplx>();
    MatC d = pc.transpose() * m * pc;
    double off = (d - MatC(d.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
    if (off > 1e-9) continue;
    if (p.determinant() < 0) p.col(0) *= -1.0;
    out.p = p;
    out.d = d.diagonal();
    return true;
  }
  return false;
}

struct LocalEquiv {
  MatC k1, k2;
  cplx phase;
};

// Finds local K1, K2 and phase in {1, i} with u = phase * K1 c K2; both inputs
// in SU(4) and locally equivalent up to that phase.
bool local_equivalence(const MatC& u, const MatC& c, int start, LocalEquiv& out) {
  const MatC b = magic_basis();
  MatC ub = b.adjoint() * u * b;
  MatC cb = b.adjoint() * c * b;
  RealDiag du, dc;
  if (!real_diagonalize(ub.transpose() * ub, start, du)) return false;
  if (!real_diagonalize(cb.transpose() * cb, start, dc)) return false;
  for (cplx ph : {cplx(1, 0), cplx(0, 1)}) {
    VecC src = ph * ph * dc.d;
    std::array<int, 4> perm{};
    std::array<bool, 4> used{};
    bool ok = true;
    for (int k = 0; k < 4; ++k) {
      int best = -1;
      for (int j = 0; j < 4; ++j)
        if (!used[static_cast<size_t>(j)] && (best < 0 || std::abs(src(j) - du.d(k)) < std::abs(src(best) - du.d(k))))
          best = j;
      used[static_cast<size_t>(best)] = true;
      perm[static_cast<size_t>(k)] = best;
      if (std::abs(src(best) - du.d(k)) > 1e-8) ok = false;
    }
    if (!ok) continue;
    Mat4d pc2;
    for (int k = 0; k < 4; ++k) pc2.col(k) = dc.p.col(perm[static_cast<size_t>(k)]);
    if (pc2.determinant() < 0) pc2.col(0) *= -1.0;
    VecC sq = du.d.cwiseSqrt();
    if ((sq(0) * sq(1) * sq(2) * sq(3)).real() < 0) sq(0) = -sq(0);
    MatC inv_sq = sq.cwiseInverse().asDiagonal();
    MatC qu = ub * du.p.cast<cplx>() * inv_sq;
    MatC qc = (ph * cb) * pc2.cast<cplx>() * inv_sq;
    out.k1 = b * (qu * qc.transpose()) * b.adjoint();
    out.k2 = b * (pc2 * du.p.transpose()).cast<cplx>() * b.adjoint();
    out.phase = ph;
    return true;
  }
  return false;
}

// k = a (x) b for a local 4x4 unitary.
std::pair<MatC, MatC> split_local(const MatC& k) {
  int bi = 0, bj = 0;
  double best = -1.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double n = k.block(2 * i, 2 * j, 2, 2).norm();
      if (n > best) {
        best = n;
        bi = i;
        bj = j;
      }
    }
  MatC b = k.block(2 * bi, 2 * bj, 2, 2) * (std::sqrt(2.0) / best);
  MatC a(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) a(i, j) = (b.adjoint() * k.block(2 * i, 2 * j, 2, 2)).trace() / 2.0;
  return {a, b};
}

double max_abs(const MatC& m) { return m.cwiseAbs().maxCoeff(); }

// Folds the remaining global phase into the first local gate acting on q0
// after the last CNOT so that the product matches `target` on `cols`.
void fix_phase(std::vector<Gate>& gates, const MatC& target, int ncols, int q0, int q1) {
  MatC r = gates_unitary(gates, q0, q1);
  cplx ph = (r.leftCols(ncols).adjoint() * target.leftCols(ncols)).trace() / static_cast<double>(ncols);
  ph /= std::abs(ph);
  for (auto it = gates.rbegin(); it != gates.rend(); ++it) {
    if (it->kind == GateKind::Generic1) {
      it->matrix *= ph;
      return;
    }
  }
}

std::vector<Gate> su4_attempt(const MatC& u_in, int start, int q0, int q1, double& err) {
  MatC u = to_su4(u_in);
  const MatC b = magic_basis();
  MatC ub = b.adjoint() * u * b;
  RealDiag rd;
  err = INFINITY;
  if (!real_diagonalize(ub.transpose() * ub, start, rd)) return {};
  std::array<double, 4> phi{};
  for (int k = 0; k < 3; ++k) phi[static_cast<size_t>(k)] = std::arg(rd.d(k)) / 2.0;
  double a = (phi[0] + phi[2]) / 2.0, bb = (phi[1] + phi[2]) / 2.0, c = (phi[0] + phi[1]) / 2.0;
  MatC id = MatC::Identity(2, 2);
  MatC core = cnot10() * kron(id, ry(pi / 2 + 2 * bb)) * cnot01() * kron(rz(pi / 2 + 2 * c), ry(pi / 2 + 2 * a)) * cnot10();
  LocalEquiv le;
  if (!local_equivalence(u, to_su4(core), start, le)) return {};
  auto [k1a, k1b] = split_local(le.k1);
  auto [k2a, k2b] = split_local(le.k2);
  std::vector<Gate> g;
  g.push_back(Gate::generic(k2a, {q0}));
  g.push_back(Gate::generic(k2b, {q1}));
  g.push_back(Gate::cnot(q1, q0));
  g.push_back(Gate::rotation(GateKind::Rz, q0, pi / 2 + 2 * c));
  g.push_back(Gate::rotation(GateKind::Ry, q1, pi / 2 + 2 * a));
  g.push_back(Gate::cnot(q0, q1));
  g.push_back(Gate::rotation(GateKind::Ry, q1, pi / 2 + 2 * bb));
  g.push_back(Gate::cnot(q1, q0));
  g.push_back(Gate::generic(k1a, {q0}));
  g.push_back(Gate::generic(k1b, {q1}));
  fix_phase(g, u_in, 4, q0, q1);
  err = max_abs(gates_unitary(g, q0, q1) - u_in);
  return g;
}

std::vector<Gate> isometry_attempt(const MatC& iso, int start, int q0, int q1, double& err) {
  err = INFINITY;
  MatC u = to_su4(complete_to_unitary(iso));
  const MatC yy = kron(pauli_y(), pauli_y());
  const MatC zz = kron(pauli_z(), pauli_z());
  // A ZZ phase on the right is free on the ancilla=|0> subspace (it acts as a
  // Z rotation on the input qubit). Choosing it so that the trace of the
  // magic-basis invariant is real reduces the nonlocal part to two angles.
  MatC x = yy * u.transpose() * yy * u;
  cplx tx = x.trace(), tz = (zz * x).trace();
  const MatC b = magic_basis();
  const std::array<double, 4> zsign = {1, -1, -1, 1};
  auto right_phase = [&](double t) {
    MatC delta = MatC::Zero(4, 4);
    for (int k = 0; k < 4; ++k) delta(k, k) = std::polar(1.0, t * zsign[static_cast<size_t>(k)]);
    return delta;
  };
  // Sorted half eigenphases of the magic-basis invariant of u * delta(t) and
  // the signed pairing residual of the best pairing. The residual vanishes
  // exactly when the nonlocal part fits in two CNOTs.
  const std::array<std::array<int, 4>, 3> pairings = {{{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}}};
  auto wrap = [](double v) { return std::remainder(v, pi); };
  struct Probe {
    bool ok = false;
    std::array<double, 4> phi{};
    int pairing = 0;
    double residual = INFINITY;
  };
  auto probe = [&](double t, int fixed_pairing) {
    Probe pr;
    MatC wb = b.adjoint() * u * right_phase(t) * b;
    RealDiag rd;
    if (!real_diagonalize(wb.transpose() * wb, start, rd)) return pr;
    for (int k = 0; k < 4; ++k) pr.phi[static_cast<size_t>(k)] = std::arg(rd.d(k)) / 2.0;
    std::sort(pr.phi.begin(), pr.phi.end());
    for (int i = 0; i < 3; ++i) {
      if (fixed_pairing >= 0 && i != fixed_pairing) continue;
      const auto& pp = pairings[static_cast<size_t>(i)];
      double r = wrap(pr.phi[static_cast<size_t>(pp[0])] + pr.phi[static_cast<size_t>(pp[1])]);
      if (std::abs(r) < std::abs(pr.residual)) {
        pr.residual = r;
        pr.pairing = i;
      }
    }
    pr.ok = true;
    return pr;
  };
  // The trace condition gives the angle in closed form but loses accuracy when
  // the spectrum is nearly degenerate; polish it with secant steps on the
  // pairing residual.
  struct Candidate {
    double theta;
    Probe probe;
  };
  std::vector<Candidate> cands;
  double theta = 0.5 * std::atan2(-tx.imag(), tz.real());
  Probe cur = probe(theta, -1);
  if (cur.ok) {
    double t0 = theta + 1e-6;
    Probe prev = probe(t0, cur.pairing);
    for (int it = 0; it < 30 && prev.ok && std::abs(cur.residual) > 1e-15; ++it) {
      double slope = (cur.residual - prev.residual) / (theta - t0);
      if (!std::isfinite(slope) || std::abs(slope) < 1e-12) break;
      double next = theta - cur.residual / slope;
      Probe np = probe(next, cur.pairing);
      if (!np.ok || std::abs(np.residual) >= std::abs(cur.residual)) break;
      t0 = theta;
      prev = cur;
      theta = next;
      cur = np;
    }
    cands.push_back({theta, cur});
  }
  // Near a local input the residual can touch zero without crossing it. Scan
  // the whole period for sign changes and bisect each one.
  if (!cur.ok || std::abs(cur.residual) > 1e-13) {
    constexpr int kGrid = 96;
    std::array<std::array<double, kGrid + 1>, 3> r{};
    std::array<bool, kGrid + 1> ok{};
    for (int k = 0; k <= kGrid; ++k) {
      double t = pi * k / kGrid;
      for (int i = 0; i < 3; ++i) {
        Probe pr = probe(t, i);
        ok[static_cast<size_t>(k)] = pr.ok;
        r[static_cast<size_t>(i)][static_cast<size_t>(k)] = pr.residual;
      }
    }
    for (int i = 0; i < 3; ++i) {
      const auto& ri = r[static_cast<size_t>(i)];
      for (int k = 0; k < kGrid; ++k) {
        double ra = ri[static_cast<size_t>(k)], rb = ri[static_cast<size_t>(k) + 1];
        if (!ok[static_cast<size_t>(k)] || !ok[static_cast<size_t>(k) + 1]) continue;
        if (ra * rb > 0.0 || std::abs(ra - rb) > 1.0) continue;  // no root, or a wrap jump
        double lo = pi * k / kGrid, hi = pi * (k + 1) / kGrid;
        for (int it = 0; it < 60 && hi - lo > 1e-16; ++it) {
          double mid = 0.5 * (lo + hi);
          Probe pm = probe(mid, i);
          if (!pm.ok) break;
          if ((pm.residual < 0.0) == (ra < 0.0)) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        double t = std::abs(ra) < std::abs(rb) && hi - lo > 1e-12 ? lo : 0.5 * (lo + hi);
        Probe pt = probe(t, i);
        if (pt.ok) cands.push_back({t, pt});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return std::abs(a.probe.residual) < std::abs(b.probe.residual);
    });
  }

  std::vector<Gate> best;
  for (const Candidate& cand : cands) {
    const double th = cand.theta;
    MatC w = u * right_phase(th);
    const auto& pp = pairings[static_cast<size_t>(cand.probe.pairing)];
    double p = cand.probe.phi[static_cast<size_t>(pp[0])], q = cand.probe.phi[static_cast<size_t>(pp[2])];
    double a = (p + q) / 2.0, c = (p - q) / 2.0;
    MatC core = cnot01() * kron(rx(2 * a), rz(2 * c)) * cnot01();
    LocalEquiv le;
    if (!local_equivalence(w, to_su4(core), start, le)) continue;
    auto [k1a, k1b] = split_local(le.k1);
    auto [k2a, k2b] = split_local(le.k2);
    std::vector<Gate> g;
    g.push_back(Gate::generic(k2a, {q0}));
    g.push_back(Gate::generic(k2b * rz(2 * th), {q1}));
    g.push_back(Gate::cnot(q0, q1));
    g.push_back(Gate::rotation(GateKind::Rx, q0, 2 * a));
    g.push_back(Gate::rotation(GateKind::Rz, q1, 2 * c));
    g.push_back(Gate::cnot(q0, q1));
    g.push_back(Gate::generic(k1a, {q0}));
    g.push_back(Gate::generic(k1b, {q1}));
    fix_phase(g, iso, 2, q0, q1);
    double e = max_abs(gates_unitary(g, q0, q1).leftCols(2) - iso);
    if (e < err) {
      err = e;
      best = std::move(g);
    }
    if (err <= 1e-10) break;
  }
  return best;
}

}  // namespace

MatC gates_unitary(const std::vector<Gate>& gates, int q0, int q1) {
  MatC m = MatC::Identity(4, 4);
  MatC id = MatC::Identity(2, 2);
  for (const Gate& g : gates) {
    MatC u = g.unitary();
    MatC full;
    if (g.arity() == 1) {
      if (g.qubits[0] == q0) {
        full = kron(u, id);
      } else if (g.qubits[0] == q1) {
        full = kron(id, u);
      } else {
        throw std::invalid_argument("gates_unitary: gate outside the qubit pair");
      }
    } else if (g.qubits[0] == q0 && g.qubits[1] == q1) {
      full = u;
    } else if (g.qubits[0] == q1 && g.qubits[1] == q0) {
      full = swap_qubits(u);
    } else {
      throw std::invalid_argument("gates_unitary: gate outside the qubit pair");
    }
    m = full * m;
  }
  return m;
}

std::vector<Gate> decompose_su4(const MatC& u, int q0, int q1) {
  if (u.rows() != 4 || u.cols() != 4 || !is_unitary(u, 1e-10))
    throw std::invalid_argument("decompose_su4: input is not a 4x4 unitary");
  std::vector<Gate> best;
  double best_err = INFINITY;
  for (int start = 0; start < static_cast<int>(kMixRatios.size()); ++start) {
    double err = INFINITY;
    auto g = su4_attempt(u, start, q0, q1, err);
    if (err < best_err) {
      best_err = err;
      best = std::move(g);
    }
    if (best_err <= 1e-10) break;
  }
  if (best.empty() || best_err > 1e-8) throw std::runtime_error("decompose_su4: magic-basis diagonalization failed");
  return best;
}

std::vector<Gate> decompose_isometry_1to2(const MatC& iso, bool ancilla_first, int q0, int q1) {
  if (iso.rows() != 4 || iso.cols() != 2 || !is_isometry(iso, 1e-10))
    throw std::invalid_argument("decompose_isometry_1to2: input is not a 4x2 isometry");
  if (!ancilla_first) return decompose_isometry_1to2(swap_matrix() * iso, true, q1, q0);
  std::vector<Gate> best;
  double best_err = INFINITY;
  for (int start = 0; start < static_cast<int>(kMixRatios.size()); ++start) {
    double err = INFINITY;
    auto g = isometry_attempt(iso, start, q0, q1, err);
    if (err < best_err) {
      best_err = err;
      best = std::move(g);
    }
    if (best_err <= 1e-10) break;
  }
  if (best.empty() || best_err > 1e-8)
    throw std::runtime_error("decompose_isometry_1to2: magic-basis diagonalization failed");
  return best;
}

}  // namespace mpsprep
