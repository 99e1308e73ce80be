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
#include <cstdio>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>
#include <unsupported/Eigen/KroneckerProduct>

#include "dense_oracle.hpp"
#include "mpsprep/loader.hpp"

namespace mpsprep {
namespace {

QuanticsGrid poly_grid(int n, std::vector<double> coef) {
  QuanticsGrid g;
  g.n_bits = n;
  g.f = [coef](double x) {
    double v = 0.0, p = 1.0;
    for (double c : coef) {
      v += c * p;
      p *= x;
    }
    return cplx(v, 0.0);
  };
  return g;
}

TEST(Quantics, IndexToPoint) {
  EXPECT_EQ(quantics_index_to_point(std::vector<int>{0, 0, 0, 0}), 0.0);
  EXPECT_EQ(quantics_index_to_point(std::vector<int>{1, 0, 0, 0}), 0.5);
  EXPECT_EQ(quantics_index_to_point(std::vector<int>{1, 1, 1, 1}), 0.9375);
  EXPECT_EQ(quantics_index_to_point(std::uint64_t{0b1011}, 4), 0.6875);
}

TEST(DenseToMps, ProductHasUnitBonds) {
  VecC a(2), b(2);
  a << 0.6, 0.8;
  b << cplx(0, 1), 1.0;
  VecC v = Eigen::kroneckerProduct(a, Eigen::kroneckerProduct(b, a)).eval();
  Mps m = dense_to_mps(v, 1e-12).mps;
  EXPECT_EQ(m.max_bond(), 1);
  EXPECT_NEAR(oracle::fidelity(v, to_dense(m)), 1.0, 1e-13);
}

TEST(DenseToMps, PolynomialRankIsDegreePlusOne) {
  for (int d = 1; d <= 4; ++d) {
    std::vector<double> coef(static_cast<size_t>(d + 1));
    for (int k = 0; k <= d; ++k) coef[static_cast<size_t>(k)] = 1.0 / (k + 1.0) * (k % 2 ? -1 : 1) + 0.3;
    Mps m = dense_to_mps(poly_grid(12, coef).dense(), 1e-12).mps;
    EXPECT_EQ(m.max_bond(), d + 1) << "degree " << d;
  }
}

TEST(DenseToMps, RandomVectorExactRoundTrip) {
  Rng rng(3);
  VecC v = oracle::random_state(12, rng);
  MpsResult r = dense_to_mps(v, 0.0);
  EXPECT_EQ(r.mps.max_bond(), 64);
  EXPECT_LE(gauge_error(r.mps), 1e-10);
  EXPECT_LE((to_dense(r.mps) - v).norm(), 1e-12);
}

TEST(DenseToMps, FidelityBoundByDiscardedWeight) {
  Rng rng(4);
  VecC v = oracle::random_state(10, rng);
  MpsResult r = dense_to_mps(v, 0.0, 8);
  EXPECT_GE(oracle::fidelity(v, to_dense(r.mps)), 1.0 - r.discarded_weight - 1e-12);
}

TEST(DenseToMps, RejectsZero) { EXPECT_THROW(dense_to_mps(VecC::Zero(8), 1e-12), std::invalid_argument); }

TEST(Datasets, GaussianShape) {
  QuanticsGrid g = gaussian_amplitudes(10);
  VecC v = g.dense();
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  EXPECT_EQ(arg, 512);  // x = 0.5
  for (int d = 1; d < 200; ++d) EXPECT_NEAR(std::abs(v(512 + d)), std::abs(v(512 - d)), 1e-14);
  Mps m = dense_to_mps(v, 1e-12).mps;
  EXPECT_NEAR(norm_squared(m), 1.0, 1e-12);
}

TEST(Datasets, LevyLimitAndMode) {
  QuanticsGrid g = levy_amplitudes(12, 32.0, 4096.0);
  EXPECT_EQ(g.at(0), cplx(0.0, 0.0));
  EXPECT_LT(std::abs(g.f(1e-9)), 1e-300);
  // Numerical mode of the density on a fine grid.
  const double c = 32.0;
  double best_x = 0.0, best = -1.0;
  for (int i = 1; i < 200000; ++i) {
    double x = i * 1e-4;
    double f = levy_density(x, c);
    if (f > best) {
      best = f;
      best_x = x;
    }
  }
  EXPECT_NEAR(best_x, c / 3.0, 2e-4);
}

TEST(Datasets, LorenzAxesAndPadding) {
  VecC v = lorenz_series(LorenzParams{});
  EXPECT_EQ(v.size(), Eigen::Index{1} << 17);
  const Eigen::Index axis = v.size() / 4;
  EXPECT_EQ(v.segment(3 * axis, axis).norm(), 0.0);
  EXPECT_NEAR(v.norm(), 1.0, 1e-12);
  EXPECT_EQ(v(0).real() * v.norm(), 0.0);  // x0 = 0
}

TEST(Datasets, LorenzDegenerateFlowKeepsX) {
  LorenzParams p;
  p.sigma = 0.0;
  p.rho = 0.0;
  p.t_final = 1.0;
  p.dt = 1.0 / 64;
  p.x0 = {0.7, 0.7, 0.2};
  VecC v = lorenz_series(p);
  for (int i = 1; i < 64; ++i) EXPECT_NEAR(v(i).real(), v(0).real(), 1e-15);
}

TEST(Datasets, LorenzDeskCompresses) {
  VecC v = lorenz_series(LorenzParams{});
  Mps m = dense_to_mps(v, 1e-8).mps;
  EXPECT_LT(m.max_bond(), 256);
  ::testing::Test::RecordProperty("lorenz_desk_chi", m.max_bond());
}

std::string write_tmp(const std::string& name, const std::string& body) {
  std::string path = ::testing::TempDir() + "/" + name;
  std::ofstream(path) << body;
  return path;
}

TEST(Datasets, CsvTwoSeriesHandArithmetic) {
  std::string path = write_tmp("two.csv", "series_id,t,value\nA,0,1\nA,1,2\nA,2,3\nA,3,4\nB,3,8\nB,0,5\nB,1,6\nB,2,7\n");
  VecC v = csv_stacked_amplitudes(path, 2, 1);
  VecR want(8);
  for (int i = 0; i < 8; ++i) want(i) = (i + 1) - 4.5;
  want /= want.norm();
  EXPECT_LE((v.real() - want).norm(), 1e-15);
  EXPECT_NEAR(v.norm(), 1.0, 1e-15);
  std::remove(path.c_str());
}

TEST(Datasets, CsvErrors) {
  std::string flat = write_tmp("flat.csv", "A,0,3\nA,1,3\nA,2,3\nA,3,3\n");
  EXPECT_THROW(
      {
        try {
          csv_stacked_amplitudes(flat, 2, 0);
        } catch (const std::invalid_argument& e) {
          EXPECT_NE(std::string(e.what()).find("degenerate after centering"), std::string::npos);
          throw;
        }
      },
      std::invalid_argument);
  std::string bad = write_tmp("bad.csv", "A,0,1\nA,x,2\n");
  EXPECT_THROW(read_series_csv(bad), std::runtime_error);
  std::string short_series = write_tmp("short.csv", "A,0,1\nA,1,2\n");
  EXPECT_THROW(csv_stacked_amplitudes(short_series, 2, 1), std::invalid_argument);
  std::remove(flat.c_str());
  std::remove(bad.c_str());
  std::remove(short_series.c_str());
}

TEST(Datasets, SyntheticCorpusPairsAreEntangled) {
  Rng rng(5);
  SyntheticCorpus c = synthetic_company_corpus(3, 6, rng);
  Mps m = dense_to_mps(stack_series(c.series, 3, 6), 1e-12).mps;
  QmiMatrix q = qmi_matrix(m);
  for (int b = 0; b < 6; ++b) {
    int partner = c.pair_of[static_cast<size_t>(b)];
    for (int o = 0; o < 6; ++o)
      if (o != b && o != partner) EXPECT_GT(q.values(b, partner), 3.0 * q.values(b, o));
  }
}

// Independent oracle: shifted power iteration.
double power_iteration_energy(int n, double h) {
  const double shift = 0.25 * (n - 1) + 0.5 * h * n + 1.0;
  Rng rng(99);
  VecC v = oracle::random_state(n, rng);
  double e_old = 0.0, e = 0.0;
  for (int it = 0; it < 200000; ++it) {
    VecC hv = ising_apply(n, h, v);
    e = v.dot(hv).real();
    v = shift * v - hv;
    v.normalize();
    if (it > 100 && std::abs(e - e_old) < 1e-15) break;
    e_old = e;
  }
  return e;
}

TEST(Ising, ClassicalLimitIsNeelSpan) {
  const int n = 6;
  IsingGround g = ising_ground_dense(n, 0.0);
  EXPECT_NEAR(g.vector.norm(), 1.0, 1e-12);
  // +S^zS^z couples antiparallel spins: the two Neel states span the ground space.
  Eigen::Index neel_a = 0b010101, neel_b = 0b101010;
  double w = std::norm(g.vector(neel_a)) + std::norm(g.vector(neel_b));
  EXPECT_NEAR(w, 1.0, 1e-12);
  EXPECT_NEAR(g.energy, -0.25 * (n - 1), 1e-12);
}

TEST(Ising, StrongFieldIsProduct) {
  // Correlations fall off as 1/h, so the rank-1 check uses a matching cutoff.
  IsingGround g = ising_ground_dense(6, 1e6);
  Mps m = dense_to_mps(g.vector, 1e-5).mps;
  EXPECT_EQ(m.max_bond(), 1);
  VecC plus = VecC::Constant(2, 1.0 / std::sqrt(2.0));
  EXPECT_NEAR(fidelity(m, product_state(std::vector<VecC>(6, plus))), 1.0, 1e-10);
}

TEST(Ising, EnergyMatchesPowerIteration) {
  IsingGround g = ising_ground_dense(12, 0.5);
  EXPECT_NEAR(g.energy, power_iteration_energy(12, 0.5), 1e-10);
  VecC hv = ising_apply(12, 0.5, g.vector);
  EXPECT_LE((hv - g.energy * g.vector).norm(), 1e-9);
  IsingGround small = ising_ground_dense(8, 0.5);
  EXPECT_NEAR(small.energy, power_iteration_energy(8, 0.5), 1e-10);
}

TEST(Ising, RejectsLargeN) { EXPECT_THROW(ising_ground_dense(15, 0.5), std::invalid_argument); }

TEST(Tci, ConstantFunction) {
  QuanticsGrid g;
  g.n_bits = 10;
  g.f = [](double) { return cplx(0.3, 0.0); };
  TciResult r = tci_build(g, TciOptions{});
  EXPECT_EQ(r.mps.max_bond(), 1);
  EXPECT_LE(r.stats.sweeps, 2);
  EXPECT_NEAR(fidelity(r.mps, dense_to_mps(g.dense(), 1e-12).mps), 1.0, 1e-12);
}

TEST(Tci, SineHasRankTwo) {
  QuanticsGrid g;
  g.n_bits = 14;
  g.f = [](double x) { return cplx(std::sin(2 * std::numbers::pi * x), 0.0); };
  TciResult r = tci_build(g, TciOptions{});
  EXPECT_EQ(r.mps.max_bond(), 2);
  EXPECT_LE(r.stats.pivot_residual, 1e-12);
  VecC d = g.dense();
  VecC t = to_dense(r.mps);
  EXPECT_LE((t - d).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Tci, CubicHasRankFour) {
  TciResult r = tci_build(poly_grid(12, {0.2, -1.0, 0.5, 2.0}), TciOptions{});
  EXPECT_EQ(r.mps.max_bond(), 4);
  EXPECT_LE(r.stats.pivot_residual, 1e-12);
}

// Random tensor train of bond r evaluated entrywise.
struct RandomTt {
  std::vector<Site> cores;
  cplx operator()(const std::vector<int>& bits) const {
    MatC row = MatC::Ones(1, 1);
    for (size_t i = 0; i < cores.size(); ++i) row = row * cores[i][static_cast<size_t>(bits[i])];
    return row(0, 0);
  }
};

RandomTt random_tt(int n, int r, Rng& rng) {
  RandomTt tt;
  for (int i = 0; i < n; ++i) {
    int l = i == 0 ? 1 : r, rr = i == n - 1 ? 1 : r;
    tt.cores.push_back({random_complex(l, rr, rng), random_complex(l, rr, rng)});
  }
  return tt;
}

TEST(Tci, RecoversRandomTensorTrain) {
  for (int r : {2, 4, 6}) {
    Rng rng(40 + r);
    const int n = 12;
    RandomTt tt = random_tt(n, r, rng);
    TciOptions opt;
    opt.seed = 1;
    TciResult res = tci_build(tt, n, opt);
    EXPECT_EQ(res.mps.max_bond(), r);
    EXPECT_LE(res.stats.pivot_residual, 1e-12);
    double fmax = 0.0, err = 0.0;
    VecC d = to_dense(res.mps);
    for (Eigen::Index x = 0; x < d.size(); ++x) {
      std::vector<int> bits(n);
      for (int i = 0; i < n; ++i) bits[static_cast<size_t>(i)] = oracle::bit(x, i, n);
      cplx f = tt(bits);
      fmax = std::max(fmax, std::abs(f));
      err = std::max(err, std::abs(d(x) - f));
    }
    EXPECT_LE(err / fmax, 1e-10) << "rank " << r;
    // Calls per sweep stay within 8 N chi^2 and far from 2^N.
    for (auto c : res.stats.calls_per_sweep) EXPECT_LE(c, 8u * n * r * r);
  }
}

TEST(Tci, RookModeMatchesFullSearch) {
  Rng rng(50);
  RandomTt tt = random_tt(10, 3, rng);
  TciOptions opt;
  opt.force_rook = true;
  TciResult rook = tci_build(tt, 10, opt);
  EXPECT_TRUE(rook.stats.rook);
  opt.force_rook = false;
  TciResult full = tci_build(tt, 10, opt);
  EXPECT_EQ(rook.mps.max_bond(), 3);
  EXPECT_NEAR(fidelity(rook.mps, full.mps), 1.0, 1e-10);
  EXPECT_LE(rook.stats.pivot_residual, 1e-12);
}

TEST(Tci, GaussianMatchesDenseCompression) {
  QuanticsGrid g = gaussian_amplitudes(20);
  TciOptions opt;
  opt.tol = 1e-10;
  TciResult r = tci_build(g, opt);
  Mps ref = dense_to_mps(g.dense(), 1e-12).mps;
  EXPECT_LE(r.mps.max_bond(), 13);
  EXPECT_GE(fidelity(r.mps, ref), 1.0 - 1e-10);
  EXPECT_LT(r.stats.calls, (std::uint64_t{1} << 20) / 10);
  EXPECT_LE(r.stats.pivot_residual, 1e-12);
  ::testing::Test::RecordProperty("gaussian_tci_calls", static_cast<int>(r.stats.calls));
}

TEST(Tci, GaussianEntropyIncrementsDecay) {
  Mps m = dense_to_mps(gaussian_amplitudes(20).dense(), 1e-12).mps;
  VecR s = bond_entropy_profile(m, Entropy::von_neumann());
  // Last 8 bonds: monotone decrease.
  for (int b = 19 - 8; b + 1 < 19; ++b) EXPECT_LE(s(b + 1), s(b) + 1e-12) << "bond " << b;
}

}  // namespace
}  // namespace mpsprep
