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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "dense_oracle.hpp"
#include "mpsprep/loader.hpp"
#include "mpsprep/reorder.hpp"

using namespace mpsprep;

namespace {

const double kLn2 = std::log(2.0);

QmiMatrix random_qmi(int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  QmiMatrix q;
  q.values = MatR::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) q.values(i, j) = q.values(j, i) = u(rng);
  return q;
}

double brute_cost(const QmiMatrix& q, const std::vector<int>& pi, double eta) {
  double c = 0.0;
  for (int i = 0; i < q.size(); ++i)
    for (int j = 0; j < q.size(); ++j)
      if (i != j) c += q.values(i, j) * std::pow(std::abs(pi[i] - pi[j]), eta);
  return c;
}

double exhaustive_min(const QmiMatrix& q) {
  std::vector<int> pi(static_cast<size_t>(q.size()));
  std::iota(pi.begin(), pi.end(), 0);
  double best = INFINITY;
  do {
    best = std::min(best, brute_cost(q, pi, 1.0));
  } while (std::next_permutation(pi.begin(), pi.end()));
  return best;
}

// Bell pair on qubits (a, b) of an n-qubit register, others in |0>.
VecC bell_dense(int n, int a, int b) {
  VecC v = VecC::Zero(Eigen::Index{1} << n);
  v(0) = 1.0 / std::sqrt(2.0);
  v((Eigen::Index{1} << (n - 1 - a)) | (Eigen::Index{1} << (n - 1 - b))) = 1.0 / std::sqrt(2.0);
  return v;
}

// Site pi[q] of the result holds qubit q of the input.
VecC permute_dense(const VecC& v, const std::vector<int>& pi, int n) {
  VecC out(v.size());
  for (Eigen::Index x = 0; x < v.size(); ++x) {
    Eigen::Index y = 0;
    for (int q = 0; q < n; ++q)
      if (oracle::bit(x, q, n)) y |= Eigen::Index{1} << (n - 1 - pi[static_cast<size_t>(q)]);
    out(y) = v(x);
  }
  return out;
}

}  // namespace

TEST(QapCost, ZeroQmi) {
  QmiMatrix q;
  q.values = MatR::Zero(5, 5);
  EXPECT_EQ(qap_cost(q, {4, 2, 0, 1, 3}, 1.0), 0.0);
}

TEST(QapCost, BellPairAtChainEnds) {
  const int n = 6;
  QmiMatrix q = qmi_matrix(dense_to_mps(bell_dense(n, 0, n - 1), 1e-12).mps);
  std::vector<int> id(n);
  std::iota(id.begin(), id.end(), 0);
  EXPECT_NEAR(qap_cost(q, id, 1.0), 2.0 * 2.0 * kLn2 * (n - 1), 1e-10);
}

TEST(QapCost, MatchesDoubleLoop) {
  Rng rng(4);
  QmiMatrix q = random_qmi(6, rng);
  std::vector<int> pi = {3, 0, 5, 1, 4, 2};
  for (double eta : {1.0, 2.0, -1.0}) EXPECT_NEAR(qap_cost(q, pi, eta), brute_cost(q, pi, eta), 1e-12);
  EXPECT_THROW(qap_cost(q, {0, 0, 1, 2, 3, 4}, 1.0), std::invalid_argument);
}

TEST(Optimize, BellPairBecomesAdjacent) {
  const int n = 7;
  QmiMatrix q = qmi_matrix(dense_to_mps(bell_dense(n, 1, 5), 1e-12).mps);
  PermutationPlan p = optimize_permutation(q, {});
  EXPECT_NEAR(p.cost_after, 2.0 * 2.0 * kLn2, 1e-10);
  EXPECT_EQ(std::abs(p.pi[1] - p.pi[5]), 1);
  EXPECT_LE(p.cost_after, p.cost_before);
}

TEST(Optimize, MatchesExhaustiveSearchAtEightQubits) {
  int hits = 0;
  for (int t = 0; t < 50; ++t) {
    Rng rng(1000 + t);
    QmiMatrix q = random_qmi(8, rng);
    ReorderOptions o;
    o.seed = t;
    PermutationPlan p = optimize_permutation(q, o);
    if (p.cost_after <= exhaustive_min(q) + 1e-12) ++hits;
  }
  EXPECT_GE(hits, 45);
}

TEST(Optimize, DeterministicUnderSeed) {
  Rng rng(8);
  QmiMatrix q = random_qmi(10, rng);
  ReorderOptions o;
  o.seed = 99;
  o.anneal = true;
  EXPECT_EQ(optimize_permutation(q, o).pi, optimize_permutation(q, o).pi);
}

TEST(Optimize, MirrorTieResolvesToSmallerPermutation) {
  Rng rng(12);
  QmiMatrix q = random_qmi(7, rng);
  PermutationPlan p = optimize_permutation(q, {});
  std::vector<int> mirror(p.pi.size());
  for (size_t k = 0; k < mirror.size(); ++k) mirror[k] = 6 - p.pi[k];
  EXPECT_NEAR(qap_cost(q, mirror, 1.0), p.cost_after, 1e-12);
  EXPECT_LT(p.pi, mirror);
}

TEST(Optimize, FrozenPositionsStay) {
  Rng rng(13);
  QmiMatrix q = random_qmi(9, rng);
  ReorderOptions o;
  o.frozen = {0, 4, 8};
  PermutationPlan p = optimize_permutation(q, o);
  EXPECT_NO_THROW(p.validate());
  for (int f : o.frozen) EXPECT_EQ(p.pi[f], f);
  o.frozen = {0, 1, 2, 3, 4, 5, 6, 7};
  PermutationPlan id = optimize_permutation(q, o);
  EXPECT_TRUE(id.is_identity());
  EXPECT_FALSE(id.warning.empty());
}

TEST(Optimize, NegativeEtaMaximizes) {
  Rng rng(14);
  QmiMatrix q = random_qmi(6, rng);
  ReorderOptions o;
  o.eta = -1.0;
  PermutationPlan p = optimize_permutation(q, o);
  std::vector<int> pi(6);
  std::iota(pi.begin(), pi.end(), 0);
  double best = -INFINITY;
  do {
    best = std::max(best, brute_cost(q, pi, -1.0));
  } while (std::next_permutation(pi.begin(), pi.end()));
  EXPECT_NEAR(p.cost_after, best, 1e-12);
}

TEST(Optimize, SyntheticCorpusImproves) {
  // Company bits are the leading qubits; time bits stay put.
  const int k = 3, m = 6;
  double gain = 0.0;
  const int trials = 5;
  for (int t = 0; t < trials; ++t) {
    Rng rng(300 + t);
    SyntheticCorpus c = synthetic_company_corpus(k, m, rng);
    Mps mps = dense_to_mps(stack_series(c.series, k, m), 1e-12).mps;
    ReorderOptions o;
    for (int q = m; q < m + k; ++q) o.frozen.push_back(q);
    PermutationPlan p = optimize_permutation(qmi_matrix(mps), o);
    gain += (p.cost_before - p.cost_after) / p.cost_before;
    for (int b = 0; b < m; ++b) EXPECT_EQ(std::abs(p.pi[b] - p.pi[c.pair_of[b]]), 1);
  }
  EXPECT_GE(gain / trials, 0.2);
}

TEST(ApplyPermutation, IdentityIsBitIdentical) {
  Rng rng(1);
  Mps m = random_mps(6, 3, rng);
  PermutationPlan p;
  p.pi = {0, 1, 2, 3, 4, 5};
  Mps r = apply_permutation(m, p, kUnbounded, 0.0).mps;
  for (int i = 0; i < 6; ++i)
    for (int s = 0; s < 2; ++s) EXPECT_EQ(r.tensors[i][s], m.tensors[i][s]);
}

TEST(ApplyPermutation, SwapsProductQubits) {
  VecC zero(2), one(2);
  zero << 1, 0;
  one << 0, 1;
  PermutationPlan p;
  p.pi = {1, 0};
  Mps r = apply_permutation(product_state({zero, one}), p, kUnbounded, 0.0).mps;
  VecC d = to_dense(r);
  EXPECT_NEAR(std::abs(d(2)), 1.0, 1e-14);
}

TEST(ApplyPermutation, MatchesDensePermutation) {
  Rng rng(10);
  const int n = 10;
  Mps m = random_mps(n, 4, rng);
  PermutationPlan p;
  p.pi.resize(n);
  std::iota(p.pi.begin(), p.pi.end(), 0);
  std::shuffle(p.pi.begin(), p.pi.end(), rng);
  MpsResult r = apply_permutation(m, p, kUnbounded, 0.0);
  VecC want = permute_dense(to_dense(m), p.pi, n);
  EXPECT_GE(oracle::fidelity(to_dense(r.mps), want), 1.0 - 1e-10);
  EXPECT_NEAR(norm_squared(r.mps), norm_squared(m), 1e-10 * norm_squared(m));
  EXPECT_EQ(r.mps.gauge, m.gauge);
}

TEST(ApplyPermutation, BudgetExceededThrows) {
  Rng rng(11);
  Mps m = random_mps(6, 4, rng);
  PermutationPlan p;
  p.pi = {5, 4, 3, 2, 1, 0};
  EXPECT_THROW(apply_permutation(m, p, 2, 0.0), std::runtime_error);
}

TEST(Plan, JsonRoundTrip) {
  PermutationPlan p;
  p.pi = {2, 0, 1, 3};
  p.eta = 1.5;
  p.cost_before = 3.0;
  p.cost_after = 1.0;
  p.frozen = {3};
  auto path = std::filesystem::temp_directory_path() / "mpsprep_plan.json";
  write_plan(path.string(), p);
  PermutationPlan r = read_plan(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(r.pi, p.pi);
  EXPECT_EQ(r.frozen, p.frozen);
  EXPECT_DOUBLE_EQ(r.eta, 1.5);
  EXPECT_THROW(plan_from_json(R"({"pi":[0,0]})"), std::invalid_argument);
}
