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

#include "mpsprep/bmpd.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "json.hpp"
#include "mpsprep/smpd.hpp"

namespace mpsprep {

namespace {

constexpr double kFdStep = 1e-6;

using Theta = std::array<double, 9>;

// exp(-i t P) for P with P^2 = 1.
MatC pauli_exp(const MatC& p, double t) {
  return std::cos(t) * MatC::Identity(p.rows(), p.cols()) - cplx(0, std::sin(t)) * p;
}

// exp(-i (a X + b Y + c Z)).
MatC bloch_exp(double a, double b, double c) {
  double n = std::sqrt(a * a + b * b + c * c);
  if (n == 0.0) return MatC::Identity(2, 2);
  MatC axis = (a * pauli_x() + b * pauli_y() + c * pauli_z()) / n;
  return pauli_exp(axis, n);
}

// The four (s, t) blocks of the two-site wavefunction at a bond, outer
// Schmidt values included so that its singular values are the bond's.
struct BondBlocks {
  std::array<std::array<MatC, 2>, 2> th;
  Eigen::Index rows = 0, cols = 0;
};

BondBlocks bond_blocks(const Mps& m, int i) {
  const int n = m.size();
  VecR ll = i > 0 ? m.singular_values[static_cast<size_t>(i - 1)] : VecR::Ones(1);
  VecR lr = i + 2 < n ? m.singular_values[static_cast<size_t>(i + 1)] : VecR::Ones(1);
  const VecR& lc = m.singular_values[static_cast<size_t>(i)];
  const Site& gl = m.tensors[static_cast<size_t>(i)];
  const Site& gr = m.tensors[static_cast<size_t>(i + 1)];
  BondBlocks b;
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 2; ++t)
      b.th[static_cast<size_t>(s)][static_cast<size_t>(t)] = ll.cast<cplx>().asDiagonal() * gl[static_cast<size_t>(s)] *
                                                             lc.cast<cplx>().asDiagonal() * gr[static_cast<size_t>(t)] *
                                                             lr.cast<cplx>().asDiagonal();
  b.rows = ll.size();
  b.cols = lr.size();
  return b;
}

double entropy_of(const BondBlocks& b, const MatC& g, double alpha) {
  const Eigen::Index r = b.rows, c = b.cols;
  MatC m = MatC::Zero(2 * r, 2 * c);
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 2; ++t) {
      auto blk = m.block(s * r, t * c, r, c);
      for (int sp = 0; sp < 2; ++sp)
        for (int tp = 0; tp < 2; ++tp) {
          cplx w = g(2 * s + t, 2 * sp + tp);
          if (w != cplx(0, 0)) blk += w * b.th[static_cast<size_t>(sp)][static_cast<size_t>(tp)];
        }
    }
  MatC gram = c <= r ? MatC(m.adjoint() * m) : MatC(m * m.adjoint());
  double tr = gram.trace().real();
  if (!(tr > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  if (alpha == 2.0) {
    double purity = gram.squaredNorm() / (tr * tr);
    return -std::log(std::min(1.0, purity));
  }
  Eigen::SelfAdjointEigenSolver<MatC> es(gram, Eigen::EigenvaluesOnly);
  VecR sv = (es.eigenvalues().cwiseMax(0.0) / tr).cwiseSqrt();
  return spectrum_entropy(sv, Entropy::renyi(alpha));
}

struct Minimum {
  Theta x{};
  double f = 0.0;
  int iterations = 0;
};

// BFGS on the inverse Hessian with central-difference gradients and an
// Armijo backtracking line search.
template <class F>
Minimum bfgs(const F& f, Theta x, int max_iter, double gtol) {
  using V = Eigen::Matrix<double, 9, 1>;
  auto to_v = [](const Theta& t) { return V(Eigen::Map<const V>(t.data())); };
  auto to_t = [](const V& v) {
    Theta t;
    Eigen::Map<V>(t.data()) = v;
    return t;
  };
  auto grad = [&](const V& v) {
    V g;
    for (int k = 0; k < 9; ++k) {
      V a = v, b = v;
      a(k) += kFdStep;
      b(k) -= kFdStep;
      g(k) = (f(to_t(a)) - f(to_t(b))) / (2 * kFdStep);
    }
    return g;
  };
  V xv = to_v(x);
  double fx = f(x);
  V g = grad(xv);
  Eigen::Matrix<double, 9, 9> h = Eigen::Matrix<double, 9, 9>::Identity();
  Minimum out;
  int stalls = 0;
  int it = 0;
  for (; it < max_iter; ++it) {
    if (!std::isfinite(fx) || g.cwiseAbs().maxCoeff() < gtol) break;
    V p = -h * g;
    if (g.dot(p) >= 0) {
      h.setIdentity();
      p = -g;
    }
    double slope = g.dot(p), t = 1.0, fn = fx;
    V xn = xv;
    for (; t > 1e-12; t *= 0.5) {
      xn = xv + t * p;
      fn = f(to_t(xn));
      if (std::isfinite(fn) && fn <= fx + 1e-4 * t * slope) break;
    }
    if (t <= 1e-12) break;
    V gn = grad(xn);
    V s = xn - xv, y = gn - g;
    double sy = s.dot(y);
    if (sy > 1e-18) {
      double rho = 1.0 / sy;
      Eigen::Matrix<double, 9, 9> e = Eigen::Matrix<double, 9, 9>::Identity() - rho * s * y.transpose();
      h = e * h * e.transpose() + rho * s * s.transpose();
    }
    stalls = fx - fn <= 1e-16 + 1e-8 * std::abs(fx) ? stalls + 1 : 0;
    xv = xn;
    fx = fn;
    g = gn;
    if (stalls >= 2) break;
  }
  out.x = to_t(xv);
  out.f = fx;
  out.iterations = it;
  return out;
}

BondOptimum optimize_bond(const Mps& mps, int bond, const BmpdConfig& cfg, Rng& rng) {
  if (mps.gauge.kind != GaugeKind::Vidal)
    throw std::invalid_argument("optimize_bond_disentangler: MPS must be in vidal gauge");
  if (bond < 0 || bond + 1 >= mps.size()) throw std::invalid_argument("optimize_bond_disentangler: bond out of range");
  BondBlocks blocks = bond_blocks(mps, bond);
  auto f = [&](const Theta& t) { return entropy_of(blocks, DisentanglerAnsatz{t}.matrix(), cfg.alpha); };
  BondOptimum out;
  out.initial_entropy = f(Theta{});
  out.entropy = out.initial_entropy;
  if (!std::isfinite(out.initial_entropy)) {
    out.warning = "non-finite initial spectrum";
    return out;
  }
  if (out.initial_entropy <= 0.0) return out;
  Minimum best = bfgs(f, Theta{}, cfg.max_iterations, cfg.gradient_tolerance);
  int total_iter = best.iterations;
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  for (int r = 0; r < cfg.restarts; ++r) {
    if (std::isfinite(best.f) && best.f <= 0.99 * out.initial_entropy) break;
    Theta x0;
    for (double& v : x0) v = angle(rng);
    Minimum m = bfgs(f, x0, cfg.max_iterations, cfg.gradient_tolerance);
    total_iter += m.iterations;
    if (std::isfinite(m.f) && (!std::isfinite(best.f) || m.f < best.f)) best = m;
  }
  out.iterations = total_iter;
  if (!std::isfinite(best.f)) {
    out.warning = "optimizer produced a non-finite spectrum; keeping the identity";
    return out;
  }
  if (best.f <= out.initial_entropy + 1e-12) {
    out.ansatz.theta = best.x;
    out.entropy = best.f;
  }
  return out;
}

double total_entropy(const Mps& m, double alpha) {
  double s = 0.0;
  for (const VecR& l : m.singular_values) s += spectrum_entropy(l, Entropy::renyi(alpha));
  return s;
}

VecR entropies(const Mps& m, double alpha) {
  VecR out(static_cast<Eigen::Index>(m.singular_values.size()));
  for (size_t i = 0; i < m.singular_values.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = spectrum_entropy(m.singular_values[i], Entropy::renyi(alpha));
  return out;
}

// Single-qubit states of the chi = 1 truncation of m.
std::vector<VecC> product_factors(const Mps& m) {
  Mps p = canonicalize(truncate(canonicalize(m, Gauge::left()), 1, 0.0).mps, Gauge::left());
  std::vector<VecC> out;
  for (const Site& s : p.tensors) {
    VecC v(2);
    v << s[0](0, 0), s[1](0, 0);
    double nv = v.norm();
    if (nv > 0.0) {
      v /= nv;
    } else {
      v << 1, 0;
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

MatC DisentanglerAnsatz::matrix() const {
  const Theta& t = theta;
  MatC xx = kron(pauli_x(), pauli_x()), yy = kron(pauli_y(), pauli_y()), zz = kron(pauli_z(), pauli_z());
  return pauli_exp(xx, t[0]) * pauli_exp(yy, t[1]) * pauli_exp(zz, t[2]) *
         kron(bloch_exp(t[6], t[7], t[8]), bloch_exp(t[3], t[4], t[5]));
}

double BmpdConfig::skip_threshold() const {
  return entropy_skip_threshold ? *entropy_skip_threshold : eps_svd * eps_svd;
}

void BmpdConfig::validate() const {
  if (!(alpha > 0.0) || alpha == 1.0) throw std::invalid_argument("bmpd: alpha must be positive and not 1");
  if (max_layers < 0) throw std::invalid_argument("bmpd: max_layers must be non-negative");
  if (chi_tilde < 1) throw std::invalid_argument("bmpd: chi_tilde must be positive");
  if (max_iterations < 0 || restarts < 0) throw std::invalid_argument("bmpd: optimizer budget must be non-negative");
}

BondOptimum optimize_bond_disentangler(const Mps& mps, int bond, const BmpdConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed + static_cast<std::uint64_t>(bond));
  return optimize_bond(mps, bond, cfg, rng);
}

double bond_entropy_after_gate(const Mps& mps, int bond, const MatC& gate, double alpha) {
  if (mps.gauge.kind != GaugeKind::Vidal) throw std::invalid_argument("bond_entropy_after_gate: needs vidal gauge");
  return entropy_of(bond_blocks(mps, bond), gate, alpha);
}

BmpdResult bmpd_build(const Mps& target, const BmpdConfig& cfg) {
  cfg.validate();
  const int n = target.size();
  double n0 = norm_squared(target);
  if (!(n0 > 0.0) || !std::isfinite(n0)) throw std::invalid_argument("bmpd_build: target is not normalizable");
  Mps goal = canonicalize(target, Gauge::right());
  goal.norm_log -= 0.5 * std::log(n0);
  Mps psi = canonicalize(goal, Gauge::vidal());
  psi.norm_log = 0.0;

  BmpdResult res;
  res.circuit.n_qubits = n;
  res.circuit.metadata["origin"] = "bmpd";
  res.initial_total_entropy = total_entropy(psi, cfg.alpha);
  const double skip = cfg.skip_threshold();
  Rng rng(cfg.seed);

  // Disentangling gates in the order they act on the target.
  std::vector<Gate> forward;
  auto closing_layer = [&](const Mps& state, int layer) {
    std::vector<Gate> g;
    std::vector<VecC> f = product_factors(state);
    for (int q = 0; q < n; ++q) {
      Gate u = Gate::generic(complete_to_unitary(f[static_cast<size_t>(q)]).adjoint(), {q});
      u.layer = layer;
      u.origin = "bmpd";
      g.push_back(u);
    }
    return g;
  };
  auto assemble = [&](const std::vector<Gate>& closing) {
    Circuit c;
    c.n_qubits = n;
    c.metadata = res.circuit.metadata;
    std::vector<Gate> all = forward;
    all.insert(all.end(), closing.begin(), closing.end());
    for (auto it = all.rbegin(); it != all.rend(); ++it) c.append(it->adjoint());
    return c;
  };

  for (int l = 0; l < cfg.max_layers; ++l) {
    auto t0 = std::chrono::steady_clock::now();
    BmpdLayerStats st;
    st.layer = l;
    for (int parity = 0; parity < 2; ++parity) {
      for (int b = parity; b + 1 < n; b += 2) {
        double s = spectrum_entropy(psi.singular_values[static_cast<size_t>(b)], Entropy::renyi(cfg.alpha));
        if (s < skip) continue;
        BondOptimum opt = optimize_bond(psi, b, cfg, rng);
        if (!opt.warning.empty())
          res.warnings.push_back("layer " + std::to_string(l) + " bond " + std::to_string(b) + ": " + opt.warning);
        MatC u = opt.ansatz.matrix();
        st.discarded_weight += apply_two_site_gate_inplace(psi, u, b, cfg.chi_tilde, cfg.eps_svd);
        Gate g = Gate::generic(u, {b, b + 1});
        g.layer = l;
        g.origin = "bmpd";
        forward.push_back(g);
        ++st.two_qubit_gates;
        if (cfg.check_gauge) st.max_gauge_error = std::max(st.max_gauge_error, gauge_error(psi));
      }
      st.sublayer_total_entropy[static_cast<size_t>(parity)] = total_entropy(psi, cfg.alpha);
    }
    st.bond_entropies = entropies(psi, cfg.alpha);
    st.total_entropy = st.bond_entropies.sum();
    st.max_bond = psi.max_bond();
    std::vector<Gate> closing = closing_layer(psi, l);
    Mps prod = zero_state(n);
    for (int q = 0; q < n; ++q) apply_single_site_gate_inplace(prod, closing[static_cast<size_t>(q)].adjoint().unitary(), q);
    st.product_fidelity = fidelity(prod, psi);
    st.infidelity = cfg.trace_infidelity ? preparation_infidelity(assemble(closing), goal, cfg.chi_tilde)
                                         : std::numeric_limits<double>::quiet_NaN();
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.trace.push_back(st);
  }
  res.disentangled = psi;
  Circuit c = assemble(closing_layer(psi, cfg.max_layers));
  res.circuit.gates = std::move(c.gates);
  return res;
}

std::string bmpd_trace_to_json(const BmpdResult& r) {
  nlohmann::json j;
  j["initial_total_entropy"] = r.initial_total_entropy;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& s : r.trace) {
    nlohmann::json e;
    e["layer"] = s.layer;
    e["bond_entropies"] = std::vector<double>(s.bond_entropies.data(), s.bond_entropies.data() + s.bond_entropies.size());
    e["total_entropy"] = s.total_entropy;
    e["sublayer_total_entropy"] = s.sublayer_total_entropy;
    e["two_qubit_gates"] = s.two_qubit_gates;
    e["max_bond"] = s.max_bond;
    e["discarded_weight"] = s.discarded_weight;
    e["product_fidelity"] = s.product_fidelity;
    if (std::isfinite(s.infidelity)) {
      e["infidelity"] = s.infidelity;
    } else {
      e["infidelity"] = nullptr;
    }
    e["seconds"] = s.seconds;
    layers.push_back(e);
  }
  j["layers"] = layers;
  j["warnings"] = r.warnings;
  return j.dump(2);
}

}  // namespace mpsprep
