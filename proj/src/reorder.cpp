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

#include "mpsprep/reorder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace mpsprep {

bool PermutationPlan::is_identity() const {
  for (int q = 0; q < size(); ++q)
    if (pi[static_cast<size_t>(q)] != q) return false;
  return true;
}

void PermutationPlan::validate() const {
  std::vector<bool> seen(pi.size(), false);
  for (int p : pi) {
    if (p < 0 || p >= size() || seen[static_cast<size_t>(p)])
      throw std::invalid_argument("permutation plan: pi is not a bijection");
    seen[static_cast<size_t>(p)] = true;
  }
  for (int f : frozen) {
    if (f < 0 || f >= size()) throw std::invalid_argument("permutation plan: frozen position out of range");
    if (pi[static_cast<size_t>(f)] != f) throw std::invalid_argument("permutation plan: frozen position moved");
  }
}

namespace {

double dist(int a, int b, double eta) { return std::pow(std::abs(a - b), eta); }

class Qap {
 public:
  Qap(const QmiMatrix& qmi, double eta) : eta_(eta), sign_(eta < 0 ? -1.0 : 1.0) {
    const MatR& v = qmi.values;
    w_ = 0.5 * (v + v.transpose());
    n_ = static_cast<int>(w_.rows());
  }

  int n() const { return n_; }

  // Objective to minimize: the cost, negated when eta < 0.
  double objective(const std::vector<int>& pi) const { return sign_ * cost(pi); }

  double cost(const std::vector<int>& pi) const {
    double c = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        if (i != j) c += w_(i, j) * dist(pi[static_cast<size_t>(i)], pi[static_cast<size_t>(j)], eta_);
    return c;
  }

  // Change of the objective when qubits a and b exchange positions.
  double swap_delta(const std::vector<int>& pi, int a, int b) const {
    int pa = pi[static_cast<size_t>(a)], pb = pi[static_cast<size_t>(b)];
    double d = 0.0;
    for (int k = 0; k < n_; ++k) {
      if (k == a || k == b) continue;
      int pk = pi[static_cast<size_t>(k)];
      double da = dist(pa, pk, eta_), db = dist(pb, pk, eta_);
      d += (w_(a, k) - w_(b, k)) * (db - da);
    }
    return 2.0 * sign_ * d;
  }

 private:
  MatR w_;
  int n_ = 0;
  double eta_;
  double sign_;
};

// Best-improvement descent over pairwise swaps of movable qubits.
void two_opt(const Qap& q, const std::vector<int>& movable, std::vector<int>& pi) {
  for (;;) {
    double f = q.objective(pi);
    double tol = 1e-12 * std::max(1.0, std::abs(f));
    double best = -tol;
    int ba = -1, bb = -1;
    for (size_t x = 0; x < movable.size(); ++x)
      for (size_t y = x + 1; y < movable.size(); ++y) {
        double d = q.swap_delta(pi, movable[x], movable[y]);
        if (d < best) {
          best = d;
          ba = movable[x];
          bb = movable[y];
        }
      }
    if (ba < 0) return;
    std::swap(pi[static_cast<size_t>(ba)], pi[static_cast<size_t>(bb)]);
  }
}

void anneal(const Qap& q, const std::vector<int>& movable, std::vector<int>& pi, int sweeps, Rng& rng) {
  if (movable.size() < 2 || sweeps <= 0) return;
  std::uniform_int_distribution<size_t> pick(0, movable.size() - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto random_pair = [&]() {
    size_t x = pick(rng), y = pick(rng);
    while (y == x) y = pick(rng);
    return std::pair{movable[x], movable[y]};
  };
  double t0 = 0.0;
  const int probes = 64;
  for (int s = 0; s < probes; ++s) {
    auto [a, b] = random_pair();
    t0 += std::abs(q.swap_delta(pi, a, b));
  }
  t0 /= probes;
  if (!(t0 > 0.0)) return;
  const long steps = static_cast<long>(sweeps) * static_cast<long>(movable.size());
  const double cool = std::pow(1e-4, 1.0 / static_cast<double>(steps));
  std::vector<int> best = pi;
  double f = q.objective(pi), fbest = f;
  double t = t0;
  for (long s = 0; s < steps; ++s, t *= cool) {
    auto [a, b] = random_pair();
    double d = q.swap_delta(pi, a, b);
    if (d <= 0.0 || unif(rng) < std::exp(-d / t)) {
      std::swap(pi[static_cast<size_t>(a)], pi[static_cast<size_t>(b)]);
      f += d;
      if (f < fbest) {
        fbest = f;
        best = pi;
      }
    }
  }
  pi = best;
}

}  // namespace

double qap_cost(const QmiMatrix& qmi, const std::vector<int>& pi, double eta) {
  if (static_cast<int>(pi.size()) != qmi.size()) throw std::invalid_argument("qap_cost: size mismatch");
  PermutationPlan p;
  p.pi = pi;
  p.validate();
  double c = 0.0;
  for (int i = 0; i < qmi.size(); ++i)
    for (int j = 0; j < qmi.size(); ++j)
      if (i != j) c += qmi.values(i, j) * dist(pi[static_cast<size_t>(i)], pi[static_cast<size_t>(j)], eta);
  return c;
}

PermutationPlan optimize_permutation(const QmiMatrix& qmi, const ReorderOptions& opt) {
  const int n = qmi.size();
  if (n < 2) throw std::invalid_argument("optimize_permutation: need at least two qubits");
  PermutationPlan plan;
  plan.eta = opt.eta;
  plan.frozen = opt.frozen;
  std::sort(plan.frozen.begin(), plan.frozen.end());
  plan.frozen.erase(std::unique(plan.frozen.begin(), plan.frozen.end()), plan.frozen.end());
  plan.pi.resize(static_cast<size_t>(n));
  std::iota(plan.pi.begin(), plan.pi.end(), 0);
  plan.validate();
  plan.cost_before = qap_cost(qmi, plan.pi, opt.eta);
  plan.cost_after = plan.cost_before;

  std::vector<int> movable;
  for (int q = 0; q < n; ++q)
    if (!std::binary_search(plan.frozen.begin(), plan.frozen.end(), q)) movable.push_back(q);
  if (movable.size() < 2) {
    plan.warning = "fewer than two movable positions; returning the identity plan";
    return plan;
  }

  Qap q(qmi, opt.eta);
  Rng rng(opt.seed);
  std::vector<int> best = plan.pi;
  double fbest = q.objective(best);
  auto consider = [&](const std::vector<int>& pi) {
    double f = q.objective(pi);
    double tol = 1e-12 * std::max(1.0, std::abs(fbest));
    if (f < fbest - tol || (std::abs(f - fbest) <= tol && pi < best)) {
      fbest = std::min(f, fbest);
      best = pi;
    }
  };

  for (int r = 0; r <= opt.restarts; ++r) {
    std::vector<int> pi = plan.pi;
    if (r > 0) {
      std::vector<int> pos = movable;
      std::shuffle(pos.begin(), pos.end(), rng);
      for (size_t k = 0; k < movable.size(); ++k) pi[static_cast<size_t>(movable[k])] = pos[k];
    }
    two_opt(q, movable, pi);
    consider(pi);
  }
  if (opt.anneal) {
    std::vector<int> pi = best;
    anneal(q, movable, pi, opt.anneal_sweeps, rng);
    two_opt(q, movable, pi);
    consider(pi);
  }
  plan.pi = best;
  plan.cost_after = qap_cost(qmi, best, opt.eta);
  return plan;
}

MpsResult apply_permutation(const Mps& mps, const PermutationPlan& plan, int chi_max, double eps,
                            double max_discarded) {
  if (plan.size() != mps.size()) throw std::invalid_argument("apply_permutation: plan size does not match the MPS");
  plan.validate();
  if (plan.is_identity()) return {mps, 0.0};
  const int n = mps.size();
  Mps m = canonicalize(mps, Gauge::mixed(0));
  // cur[p] is the original qubit currently at site p.
  std::vector<int> cur(static_cast<size_t>(n));
  std::iota(cur.begin(), cur.end(), 0);
  const MatC sw = swap_matrix();
  double disc = 0.0;
  int swaps = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (int p = 0; p + 1 < n; ++p) {
      auto& a = cur[static_cast<size_t>(p)];
      auto& b = cur[static_cast<size_t>(p + 1)];
      if (plan.pi[static_cast<size_t>(a)] <= plan.pi[static_cast<size_t>(b)]) continue;
      disc += apply_two_site_gate_inplace(m, sw, p, chi_max, eps);
      std::swap(a, b);
      ++swaps;
      changed = true;
      if (disc > max_discarded) {
        std::ostringstream os;
        os << "apply_permutation: discarded weight " << disc << " exceeds budget " << max_discarded << " after "
           << swaps << " swaps (site " << p << ", bond " << m.bond_dim(p) << ", chi_max " << chi_max << ")";
        throw std::runtime_error(os.str());
      }
    }
  }
  if (mps.gauge.kind != GaugeKind::None && !(mps.gauge == m.gauge)) m = canonicalize(m, mps.gauge);
  return {m, disc};
}

void record_entropies(PermutationPlan& plan, const Mps& before, const Mps& after) {
  Entropy e = Entropy::von_neumann();
  VecR b = bond_entropy_profile(before, e), a = bond_entropy_profile(after, e);
  plan.entropy_before_max = b.size() ? b.maxCoeff() : 0.0;
  plan.entropy_after_max = a.size() ? a.maxCoeff() : 0.0;
}

std::string plan_to_json(const PermutationPlan& plan) {
  nlohmann::json j;
  j["pi"] = plan.pi;
  j["eta"] = plan.eta;
  j["cost_before"] = plan.cost_before;
  j["cost_after"] = plan.cost_after;
  j["frozen"] = plan.frozen;
  j["entropy_before_max"] = plan.entropy_before_max;
  j["entropy_after_max"] = plan.entropy_after_max;
  return j.dump(2);
}

PermutationPlan plan_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  PermutationPlan p;
  p.pi = j.at("pi").get<std::vector<int>>();
  p.eta = j.value("eta", 1.0);
  p.cost_before = j.value("cost_before", 0.0);
  p.cost_after = j.value("cost_after", 0.0);
  p.frozen = j.value("frozen", std::vector<int>{});
  p.entropy_before_max = j.value("entropy_before_max", 0.0);
  p.entropy_after_max = j.value("entropy_after_max", 0.0);
  p.validate();
  return p;
}

void write_plan(const std::string& path, const PermutationPlan& plan) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_plan: cannot open " + path);
  os << plan_to_json(plan) << '\n';
}

PermutationPlan read_plan(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_plan: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return plan_from_json(ss.str());
}

}  // namespace mpsprep
