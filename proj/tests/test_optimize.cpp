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

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "circuit_oracle.hpp"
#include "dense_oracle.hpp"
#include "mpsprep/loader.hpp"
#include "mpsprep/optimize.hpp"

using namespace mpsprep;

namespace {

// Brick-wall circuit of random two-qubit gates with both qubit orders,
// single-qubit gates and a few CNOTs.
Circuit random_circuit(int n, int layers, Rng& rng) {
  Circuit c;
  c.n_qubits = n;
  for (int l = 0; l < layers; ++l) {
    for (int b = l % 2; b + 1 < n; b += 2) {
      if ((b + l) % 3 == 0) {
        c.append(Gate::generic(haar_unitary(4, rng), {b + 1, b}));
      } else {
        c.append(Gate::generic(haar_unitary(4, rng), {b, b + 1}));
      }
    }
    c.append(Gate::generic(haar_unitary(2, rng), {l % n}));
    c.append(Gate::cnot(l % (n - 1), l % (n - 1) + 1));
    c.append(Gate::rotation(GateKind::Ry, (l + 1) % n, 0.3 + l));
  }
  return c;
}

VecC dense_run(const std::vector<Gate>& g, int n) { return oracle::run_gates(g, oracle::zero_state(n), n); }

// Dense environment: sum over the other qubits of t_m(x) conj(psi_{m-1}(y)).
MatC dense_environment(const Circuit& c, int m, const VecC& target) {
  const int n = c.n_qubits;
  std::vector<Gate> before(c.gates.begin(), c.gates.begin() + m);
  VecC psi = dense_run(before, n);
  VecC t = target;
  for (int k = static_cast<int>(c.gates.size()) - 1; k > m; --k) t = oracle::run_gates({c.gates[k].adjoint()}, t, n);
  const std::vector<int>& q = c.gates[m].qubits;
  const int d = 1 << q.size();
  MatC f = MatC::Zero(d, d);
  auto local = [&](Eigen::Index i) {
    int x = 0;
    for (int qq : q) x = 2 * x + oracle::bit(i, qq, n);
    return x;
  };
  auto with_local = [&](Eigen::Index i, int x) {
    for (int k = static_cast<int>(q.size()) - 1; k >= 0; --k) {
      Eigen::Index mask = Eigen::Index{1} << (n - 1 - q[static_cast<size_t>(k)]);
      i = (x & 1) ? (i | mask) : (i & ~mask);
      x >>= 1;
    }
    return i;
  };
  for (Eigen::Index i = 0; i < t.size(); ++i)
    for (int y = 0; y < d; ++y) f(local(i), y) += t(i) * std::conj(psi(with_local(i, y)));
  return f;
}

double loss_dense(const Circuit& c, const VecC& target) {
  VecC out = dense_run(c.gates, c.n_qubits);
  return 1.0 - std::norm(target.dot(out)) / target.squaredNorm();
}

}  // namespace

TEST(Environment, MatchesDenseContraction) {
  Rng rng(3);
  const int n = 8;
  Circuit c = random_circuit(n, 4, rng);
  Mps target = random_mps(n, 4, rng);
  VecC td = to_dense(target);
  VecC out = dense_run(c.gates, n);
  cplx ov = out.dot(td);
  for (int m = 0; m < static_cast<int>(c.gates.size()); ++m) {
    MatC f = environment(c, m, target, kUnbounded);
    EXPECT_LE((f - dense_environment(c, m, td)).cwiseAbs().maxCoeff(), 1e-10) << m;
    // Re-inserting the gate gives back the overlap.
    EXPECT_LE(std::abs((c.gates[m].unitary().adjoint() * f).trace() - ov), 1e-10) << m;
  }
}

TEST(Environment, SingleGateProductTarget) {
  // One gate on (1, 2) of a 3-qubit circuit; target a|0> (x) |v>.
  Circuit c;
  c.n_qubits = 3;
  Rng rng(1);
  c.append(Gate::generic(haar_unitary(4, rng), {1, 2}));
  VecC v = random_complex(4, 1, rng);
  v /= v.norm();
  std::vector<VecC> loc = {VecC::Unit(2, 0), VecC::Unit(2, 0), VecC::Unit(2, 0)};
  VecC full = VecC::Zero(8);
  full.head(4) = v;
  Mps t = dense_to_mps(full, 1e-14).mps;
  MatC f = environment(c, 0, t, kUnbounded);
  MatC expect = MatC::Zero(4, 4);
  expect.col(0) = v;
  EXPECT_LE((f - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EvUpdate, UnitaryEnvironmentIsReturned) {
  Rng rng(5);
  MatC f = haar_unitary(4, rng);
  EXPECT_LE((ev_update(haar_unitary(4, rng), f, 1.0).u - f).cwiseAbs().maxCoeff(), 1e-12);
  EvUpdate z = ev_update(f, MatC::Zero(4, 4), 0.6);
  EXPECT_TRUE(z.zero_environment);
  EXPECT_TRUE(z.u == f);
  EXPECT_THROW(ev_update(f, f, 0.0), std::invalid_argument);
  EXPECT_THROW(ev_update(f, f, 1.5), std::invalid_argument);
}

TEST(EvUpdate, FullStepIsMaximalAndPartialStepIsBetween) {
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    int d = t % 2 ? 2 : 4;
    MatC u = haar_unitary(d, rng);
    MatC f = random_complex(d, d, rng);
    double before = std::abs((u.adjoint() * f).trace());
    MatC full = ev_update(u, f, 1.0).u;
    double best = std::abs((full.adjoint() * f).trace());
    Eigen::JacobiSVD<MatC> svd(f);
    EXPECT_NEAR(best, svd.singularValues().sum(), 1e-12);
    EXPECT_GE(best, before - 1e-12);
    EXPECT_LE(unitarity_error(ev_update(u, f, 0.6).u), 1e-10);
  }
}

TEST(EvUpdate, PartialStepOnFrozenCase) {
  // Not true for every environment: the partial step shrinks eigenphases,
  // which raises Re Tr but can lower |Tr|.
  Rng rng(2024);
  MatC u = haar_unitary(4, rng);
  MatC f = random_complex(4, 4, rng);
  double before = std::abs((u.adjoint() * f).trace());
  double best = std::abs((ev_update(u, f, 1.0).u.adjoint() * f).trace());
  double mid = std::abs((ev_update(u, f, 0.6).u.adjoint() * f).trace());
  EXPECT_GT(mid, before);
  EXPECT_LT(mid, best);
}

TEST(EvSweep, DenseModeIsMonotonePerUpdate) {
  for (int seed = 0; seed < 3; ++seed) {
    Rng rng(40 + static_cast<std::uint64_t>(seed));
    const int n = 6;
    Circuit c = random_circuit(n, 3, rng);
    Mps target = random_mps(n, 4, rng);
    EvOptions opt;
    opt.beta = 1.0;
    opt.n_sweeps = 4;
    opt.chi_max = kUnbounded;
    opt.record_updates = true;
    opt.absorb = false;
    OptimizeResult r = ev_sweep(c, target, opt);
    ASSERT_FALSE(r.update_overlaps.empty());
    for (size_t k = 1; k < r.update_overlaps.size(); ++k)
      EXPECT_GE(r.update_overlaps[k], r.update_overlaps[k - 1] - 1e-12) << k;
    for (size_t k = 1; k < r.history.size(); ++k) EXPECT_LE(r.history[k].infidelity, r.history[k - 1].infidelity + 1e-12);
    // History is consistent with a dense evaluation of the final circuit.
    EXPECT_NEAR(r.history.back().infidelity, loss_dense(r.circuit, to_dense(target)), 1e-10);
  }
}

TEST(EvSweep, OptimalCircuitStaysFlat) {
  SmpdConfig cfg;
  Mps g = ghz_state(6);
  Circuit c = smpd_build(g, cfg).circuit;
  EvOptions opt;
  opt.n_sweeps = 3;
  OptimizeResult r = ev_sweep(c, g, opt);
  for (const auto& h : r.history) EXPECT_LE(h.infidelity, 1e-12);
}

TEST(Riemannian, TangentProjection) {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    MatC u = haar_unitary(4, rng);
    MatC g = random_complex(4, 4, rng);
    MatC xi = riemannian_gradient(u, g);
    MatC a = u.adjoint() * xi;
    EXPECT_LE((a + a.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
    // Idempotent, and equal to the projection formula written out.
    EXPECT_LE((riemannian_gradient(u, xi) - xi).cwiseAbs().maxCoeff(), 1e-12);
    MatC proj = 0.5 * u * (u.adjoint() * g - g.adjoint() * u) + (MatC::Identity(4, 4) - u * u.adjoint()) * g;
    EXPECT_LE((stiefel_projection(u, g) - proj).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE(riemannian_gradient(u, u).cwiseAbs().maxCoeff(), 1e-12);
  }
  // Rectangular isometries too.
  MatC iso = haar_unitary(4, rng).leftCols(2);
  MatC xi = riemannian_gradient(iso, random_complex(4, 2, rng));
  MatC a = iso.adjoint() * xi;
  EXPECT_LE((a + a.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Riemannian, RetractionIsSecondOrder) {
  Rng rng(10);
  MatC u = haar_unitary(4, rng);
  EXPECT_LE((svd_retraction(u, MatC::Zero(4, 4)) - u).cwiseAbs().maxCoeff(), 1e-12);
  MatC v = riemannian_gradient(u, random_complex(4, 4, rng));
  v /= v.norm();
  double t1 = 1e-4, t2 = 1e-1;
  double e1 = (svd_retraction(u, t1 * v) - (u + t1 * v)).norm();
  double e2 = (svd_retraction(u, t2 * v) - (u + t2 * v)).norm();
  double slope = std::log(e2 / e1) / std::log(t2 / t1);
  EXPECT_GE(slope, 1.9);
  for (int t = 0; t < 20; ++t) EXPECT_LE(unitarity_error(svd_retraction(u, random_complex(4, 4, rng))), 1e-12);
  // Rank-deficient input still returns a unitary.
  EXPECT_LE(unitarity_error(svd_retraction(u, -u)), 1e-12);
}

TEST(Riemannian, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  const int n = 5;
  int checked = 0;
  for (int inst = 0; inst < 20; ++inst) {
    Circuit c = random_circuit(n, 2, rng);
    Mps target = random_mps(n, 4, rng);
    VecC td = to_dense(target);
    td /= td.norm();
    int m = static_cast<int>(rng() % c.gates.size());
    while (!c.gates[m].variational()) m = (m + 1) % static_cast<int>(c.gates.size());
    c.gates[m] = Gate::generic(c.gates[m].unitary(), c.gates[m].qubits);
    MatC f = environment(c, m, target, kUnbounded);
    cplx ov = (c.gates[m].matrix.adjoint() * f).trace();
    MatC g = euclidean_fidelity_gradient(f, ov);
    MatC dir = random_complex(static_cast<int>(f.rows()), static_cast<int>(f.cols()), rng);
    const double h = 1e-6;
    Circuit cp = c, cm = c;
    cp.gates[m].matrix += h * dir;
    cm.gates[m].matrix -= h * dir;
    double fd = (loss_dense(cp, td) - loss_dense(cm, td)) / (2 * h);
    double an = (g.adjoint() * dir).trace().real();
    EXPECT_LE(std::abs(fd - an), 1e-5 * std::max(1.0, std::abs(an))) << inst;
    // A global phase on the target leaves the gradient norm unchanged.
    Mps rot = target;
    apply_single_site_gate_inplace(rot, std::polar(1.0, 0.7) * MatC::Identity(2, 2), 0);
    MatC f2 = environment(c, m, rot, kUnbounded);
    MatC g2 = euclidean_fidelity_gradient(f2, (c.gates[m].matrix.adjoint() * f2).trace());
    EXPECT_NEAR(g2.norm(), g.norm(), 1e-12);
    ++checked;
  }
  EXPECT_EQ(checked, 20);
}

TEST(Riemannian, StationaryAtOptimum) {
  Rng rng(12);
  MatC u0 = haar_unitary(4, rng);
  Circuit c;
  c.n_qubits = 2;
  c.append(Gate::generic(u0, {0, 1}));
  VecC t = u0.col(0);
  Mps target = dense_to_mps(t, 1e-14).mps;
  MatC f = environment(c, 0, target, kUnbounded);
  MatC rg = riemannian_gradient(u0, euclidean_fidelity_gradient(f, (u0.adjoint() * f).trace()));
  EXPECT_LE(rg.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Adam, OptimalCircuitUnchangedAndStepsStayUnitary) {
  // Exact product preparation: every gradient is zero up to rounding.
  Rng prng(3);
  Circuit c;
  c.n_qubits = 4;
  std::vector<VecC> loc;
  for (int q = 0; q < 4; ++q) {
    MatC u = haar_unitary(2, prng);
    c.append(Gate::generic(u, {q}));
    loc.push_back(u.col(0));
  }
  Mps g = product_state(loc);
  AdamOptions opt;
  opt.n_iter = 5;
  opt.absorb = false;
  OptimizeResult r = riemannian_adam(c, g, opt);
  ASSERT_EQ(r.circuit.gates.size(), c.gates.size());
  for (size_t k = 0; k < c.gates.size(); ++k)
    EXPECT_LE((r.circuit.gates[k].unitary() - c.gates[k].unitary()).cwiseAbs().maxCoeff(), 1e-10);

  Rng rng(13);
  Circuit rc = random_circuit(5, 2, rng);
  Mps target = random_mps(5, 4, rng);
  opt.n_iter = 60;
  opt.lr = 1e-2;
  OptimizeResult rr = riemannian_adam(rc, target, opt);
  for (const Gate& gg : rr.circuit.gates) EXPECT_LE(unitarity_error(gg.unitary()), 1e-10);
  EXPECT_LT(rr.history.back().infidelity, rr.history.front().infidelity);
  EXPECT_NEAR(rr.history.back().infidelity, loss_dense(rr.circuit, to_dense(target)), 1e-10);
}

TEST(Interleaved, OneLayerEqualsHeuristicThenOptimizer) {
  Rng rng(14);
  Mps target = random_mps(6, 4, rng);
  InterleavedOptions io;
  io.layers = 1;
  io.ev.n_sweeps = 3;
  InterleavedResult ir = interleaved_pipeline(target, io);
  io.optimizer = OptimizerKind::None;
  Circuit base = interleaved_pipeline(target, io).circuit;
  EXPECT_NEAR(preparation_infidelity(base, target, kUnbounded),
              preparation_infidelity(smpd_build(target, SmpdConfig{}).circuit, target, kUnbounded), 1e-10);
  OptimizeResult o = ev_sweep(base, target, io.ev);
  EXPECT_NEAR(ir.trace.back().infidelity, o.history.back().infidelity, 1e-9);
  EXPECT_EQ(ir.trace.front().stage, "heuristic");
  EXPECT_NEAR(ir.trace.front().infidelity, o.history.front().infidelity, 1e-10);
}

TEST(Interleaved, TwoLayersImproveOnOne) {
  Rng rng(15);
  Mps target = random_mps(6, 4, rng);
  InterleavedOptions io;
  io.layers = 2;
  io.ev.n_sweeps = 5;
  InterleavedResult ir = interleaved_pipeline(target, io);
  double after_one = 1.0;
  for (const auto& row : ir.trace)
    if (row.layer == 0) after_one = row.infidelity;
  EXPECT_LT(ir.trace.back().infidelity, after_one);
  EXPECT_THROW(heuristic_from_name("x"), std::invalid_argument);
  EXPECT_EQ(optimizer_from_name(optimizer_name(OptimizerKind::Riemannian)), OptimizerKind::Riemannian);
}
