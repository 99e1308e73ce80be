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

#include "mpsprep/optimize.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace mpsprep {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Mps normalized_target(const Mps& target) {
  double n0 = norm_squared(target);
  if (!(n0 > 0.0) || !std::isfinite(n0)) throw std::invalid_argument("optimize: target is not normalizable");
  Mps t = canonicalize(target, Gauge::mixed(0));
  t.norm_log -= 0.5 * std::log(n0);
  return t;
}

Mps start_state(int n) { return canonicalize(zero_state(n), Gauge::mixed(0)); }

void check_circuit(const Circuit& c, const Mps& target) {
  if (c.n_qubits != target.size()) throw std::invalid_argument("optimize: circuit and target sizes differ");
  c.validate();
  for (const Gate& g : c.gates)
    if (g.is_two_qubit() && std::abs(g.qubits[0] - g.qubits[1]) != 1)
      throw std::invalid_argument("optimize: gates must act on adjacent qubits");
}

void apply_adjoint(Mps& s, const Gate& g, int chi, double eps) { apply_gate(s, g.adjoint(), chi, eps); }

Gate with_matrix(const Gate& g, const MatC& u) {
  Gate out = Gate::generic(u, g.qubits);
  out.layer = g.layer;
  out.origin = g.origin;
  return out;
}

double infidelity_of(cplx overlap) { return std::max(0.0, 1.0 - std::norm(overlap)); }

constexpr double kGradientFloor = 1e-13;

Circuit prepared(const Circuit& c, bool absorb) { return absorb ? absorb_adjacent_gates(c) : c; }

}  // namespace

MatC transition_environment(const Mps& a, const Mps& b, const std::vector<int>& qubits) {
  const int n = a.size();
  if (b.size() != n) throw std::invalid_argument("transition_environment: size mismatch");
  if (qubits.empty() || qubits.size() > 2) throw std::invalid_argument("transition_environment: one or two qubits");
  int lo = qubits[0], hi = qubits[0];
  if (qubits.size() == 2) {
    if (std::abs(qubits[0] - qubits[1]) != 1) throw std::invalid_argument("transition_environment: qubits not adjacent");
    lo = std::min(qubits[0], qubits[1]);
    hi = lo + 1;
  }
  if (lo < 0 || hi >= n) throw std::invalid_argument("transition_environment: qubit out of range");
  MatC l = MatC::Ones(1, 1);
  for (int i = 0; i < lo; ++i) {
    const Site& sa = a.tensors[static_cast<size_t>(i)];
    const Site& sb = b.tensors[static_cast<size_t>(i)];
    l = sa[0].transpose() * l * sb[0].conjugate() + sa[1].transpose() * l * sb[1].conjugate();
  }
  MatC r = MatC::Ones(1, 1);
  for (int i = n - 1; i > hi; --i) {
    const Site& sa = a.tensors[static_cast<size_t>(i)];
    const Site& sb = b.tensors[static_cast<size_t>(i)];
    r = sa[0] * r * sb[0].adjoint() + sa[1] * r * sb[1].adjoint();
  }
  const double scale = std::exp(a.norm_log + b.norm_log);
  const int d = hi == lo ? 2 : 4;
  auto piece = [&](const Mps& m, int idx) -> MatC {
    const Site& s0 = m.tensors[static_cast<size_t>(lo)];
    if (hi == lo) return s0[static_cast<size_t>(idx)];
    const Site& s1 = m.tensors[static_cast<size_t>(hi)];
    return s0[static_cast<size_t>(idx >> 1)] * s1[static_cast<size_t>(idx & 1)];
  };
  MatC f(d, d);
  std::vector<MatC> qs;
  for (int y = 0; y < d; ++y) qs.push_back(piece(b, y).conjugate());
  for (int x = 0; x < d; ++x) {
    MatC m2 = l.transpose() * piece(a, x) * r;
    for (int y = 0; y < d; ++y) f(x, y) = scale * qs[static_cast<size_t>(y)].cwiseProduct(m2).sum();
  }
  if (qubits.size() == 2 && qubits[0] > qubits[1]) f = swap_qubits(f);
  return f;
}

MatC environment(const Circuit& c, int m, const Mps& target, int chi_max) {
  if (m < 0 || m >= static_cast<int>(c.gates.size())) throw std::out_of_range("environment: gate index out of range");
  check_circuit(c, target);
  Mps psi = start_state(c.n_qubits);
  for (int k = 0; k < m; ++k) apply_gate(psi, c.gates[static_cast<size_t>(k)], chi_max, 1e-14);
  Mps t = canonicalize(target, Gauge::mixed(0));
  for (int k = static_cast<int>(c.gates.size()) - 1; k > m; --k) apply_adjoint(t, c.gates[static_cast<size_t>(k)], chi_max, 1e-14);
  return transition_environment(t, psi, c.gates[static_cast<size_t>(m)].qubits);
}

EvUpdate ev_update(const MatC& u, const MatC& f, double beta) {
  if (!(beta > 0.0) || beta > 1.0) throw std::invalid_argument("ev_update: beta must be in (0, 1]");
  if (!f.allFinite()) throw std::invalid_argument("ev_update: environment is not finite");
  EvUpdate out;
  if (f.cwiseAbs().maxCoeff() == 0.0) {
    out.u = u;
    out.zero_environment = true;
    return out;
  }
  Svd d = svd(f);
  // On the null space of F every unitary completion is optimal; take the one
  // closest to u so rank-deficient environments do not rotate at random.
  const Eigen::Index dim = f.rows();
  Eigen::Index r = 0;
  while (r < d.S.size() && d.S(r) > 1e-12 * d.S(0)) ++r;
  MatC best = d.U.leftCols(r) * d.V.leftCols(r).adjoint();
  if (r < dim) {
    MatC x0 = d.U.rightCols(dim - r), y0 = d.V.rightCols(dim - r);
    Svd w = svd(x0.adjoint() * u * y0);
    best += x0 * (w.U * w.V.adjoint()) * y0.adjoint();
  }
  out.u = beta == 1.0 ? best : MatC(u * unitary_power(u.adjoint() * best, beta));
  return out;
}

OptimizeResult ev_sweep(const Circuit& c, const Mps& target, const EvOptions& opt) {
  if (!(opt.beta > 0.0) || opt.beta > 1.0) throw std::invalid_argument("ev_sweep: beta must be in (0, 1]");
  if (opt.n_sweeps < 0) throw std::invalid_argument("ev_sweep: n_sweeps must be non-negative");
  check_circuit(c, target);
  auto t0 = Clock::now();
  const Mps tn = normalized_target(target);
  OptimizeResult res;
  res.circuit = prepared(c, opt.absorb);
  std::vector<Gate>& gates = res.circuit.gates;
  const int m_gates = static_cast<int>(gates.size());
  const int n = c.n_qubits;
  const int chi = opt.chi_max;
  const double eps = opt.eps_svd;
  res.history.push_back({0, preparation_infidelity(res.circuit, tn, chi), since(t0)});

  auto update = [&](int m, const Mps& tb, const Mps& psi) {
    Gate& g = gates[static_cast<size_t>(m)];
    if (!g.variational()) return;
    MatC f = transition_environment(tb, psi, g.qubits);
    EvUpdate u = ev_update(g.unitary(), f, opt.beta);
    if (u.zero_environment) {
      if (res.warning.empty()) res.warning = "zero environment encountered; gate kept";
      return;
    }
    g = with_matrix(g, u.u);
    if (opt.record_updates) res.update_overlaps.push_back(std::abs((u.u.adjoint() * f).trace()));
  };

  for (int sweep = 1; sweep <= opt.n_sweeps && m_gates > 0; ++sweep) {
    // Forward: psi holds gates < m, tb the target pulled back through gates > m.
    Mps psi = start_state(n);
    Mps tb = tn;
    for (int k = m_gates - 1; k >= 1; --k) apply_adjoint(tb, gates[static_cast<size_t>(k)], chi, eps);
    for (int m = 0; m < m_gates; ++m) {
      update(m, tb, psi);
      apply_gate(psi, gates[static_cast<size_t>(m)], chi, eps);
      if (m + 1 < m_gates) apply_gate(tb, gates[static_cast<size_t>(m + 1)], chi, eps);
    }
    // Backward: undo gate m on psi, update, pull the target back through it.
    tb = tn;
    for (int m = m_gates - 1; m >= 0; --m) {
      apply_adjoint(psi, gates[static_cast<size_t>(m)], chi, eps);
      update(m, tb, psi);
      apply_adjoint(tb, gates[static_cast<size_t>(m)], chi, eps);
    }
    res.history.push_back({sweep, preparation_infidelity(res.circuit, tn, chi), since(t0)});
  }
  return res;
}

MatC stiefel_projection(const MatC& u, const MatC& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) throw std::invalid_argument("stiefel_projection: shape mismatch");
  MatC a = u.adjoint() * v;
  return 0.5 * u * (a - a.adjoint()) + v - u * a;
}

MatC riemannian_gradient(const MatC& u, const MatC& egrad) {
  if (u.rows() != egrad.rows() || u.cols() != egrad.cols())
    throw std::invalid_argument("riemannian_gradient: shape mismatch");
  return stiefel_projection(u, egrad);
}

MatC svd_retraction(const MatC& u, const MatC& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) throw std::invalid_argument("svd_retraction: shape mismatch");
  MatC w = u + v;
  Svd d = svd(w);
  if (d.S.size() == 0 || d.S.minCoeff() <= 1e-14 * std::max(1.0, d.S.maxCoeff())) {
    w += 1e-14 * MatC::Identity(w.rows(), w.cols());
    d = svd(w);
  }
  return d.U.leftCols(u.cols()) * d.V.adjoint();
}

MatC euclidean_fidelity_gradient(const MatC& f_env, cplx overlap) { return -2.0 * std::conj(overlap) * f_env; }

OptimizeResult riemannian_adam(const Circuit& c, const Mps& target, const AdamOptions& opt) {
  if (!(opt.lr > 0.0) || opt.n_iter < 0) throw std::invalid_argument("riemannian_adam: bad learning rate or budget");
  check_circuit(c, target);
  auto t0 = Clock::now();
  const Mps tn = normalized_target(target);
  OptimizeResult res;
  res.circuit = prepared(c, opt.absorb);
  std::vector<Gate>& gates = res.circuit.gates;
  const int m_gates = static_cast<int>(gates.size());
  const int n = c.n_qubits;
  for (Gate& g : gates)
    if (g.variational() && g.kind != GateKind::Generic1 && g.kind != GateKind::Generic2) g = with_matrix(g, g.unitary());

  std::vector<MatC> mom(static_cast<size_t>(m_gates));
  std::vector<double> vel(static_cast<size_t>(m_gates), 0.0);
  for (int m = 0; m < m_gates; ++m) {
    const Gate& g = gates[static_cast<size_t>(m)];
    if (g.variational()) mom[static_cast<size_t>(m)] = MatC::Zero(g.matrix.rows(), g.matrix.cols());
  }
  std::vector<Mps> back(static_cast<size_t>(m_gates));
  std::vector<MatC> env(static_cast<size_t>(m_gates));

  for (int it = 0; it <= opt.n_iter; ++it) {
    // Environments of every gate for the current circuit.
    cplx overlap = 0.0;
    if (m_gates > 0) {
      back[static_cast<size_t>(m_gates - 1)] = tn;
      for (int m = m_gates - 1; m >= 1; --m) {
        back[static_cast<size_t>(m - 1)] = back[static_cast<size_t>(m)];
        apply_adjoint(back[static_cast<size_t>(m - 1)], gates[static_cast<size_t>(m)], opt.chi_max, opt.eps_svd);
      }
      Mps psi = start_state(n);
      for (int m = 0; m < m_gates; ++m) {
        const Gate& g = gates[static_cast<size_t>(m)];
        if (g.variational()) env[static_cast<size_t>(m)] = transition_environment(back[static_cast<size_t>(m)], psi, g.qubits);
        apply_gate(psi, g, opt.chi_max, opt.eps_svd);
      }
      overlap = mpsprep::overlap(psi, tn);
    } else {
      overlap = mpsprep::overlap(start_state(n), tn);
    }
    if (!std::isfinite(overlap.real()) || !std::isfinite(overlap.imag())) {
      res.warning = "non-finite overlap at iteration " + std::to_string(it) + "; returning last good circuit";
      break;
    }
    res.history.push_back({it, infidelity_of(overlap), since(t0)});
    if (it == opt.n_iter) break;

    const double c1 = 1.0 - std::pow(opt.beta1, it + 1), c2 = 1.0 - std::pow(opt.beta2, it + 1);
    std::vector<Gate> next = gates;
    bool bad = false;
    for (int m = 0; m < m_gates && !bad; ++m) {
      Gate& g = next[static_cast<size_t>(m)];
      if (!g.variational()) continue;
      const MatC& u = gates[static_cast<size_t>(m)].matrix;
      MatC eg = euclidean_fidelity_gradient(env[static_cast<size_t>(m)], overlap);
      MatC rg = riemannian_gradient(u, eg);
      // Rounding noise at a stationary point would otherwise be amplified by
      // the lr / eps gain of the normalized step.
      if (rg.norm() <= kGradientFloor * std::max(1.0, eg.norm())) rg.setZero();
      MatC& mm = mom[static_cast<size_t>(m)];
      double& vv = vel[static_cast<size_t>(m)];
      mm = opt.beta1 * mm + (1 - opt.beta1) * rg;
      vv = opt.beta2 * vv + (1 - opt.beta2) * rg.squaredNorm();
      MatC step = -opt.lr * (mm / c1) / (std::sqrt(vv / c2) + opt.eps);
      MatC un = svd_retraction(u, step);
      if (!un.allFinite()) {
        bad = true;
        break;
      }
      mm = stiefel_projection(un, mm);
      g.matrix = un;
    }
    if (bad) {
      res.warning = "non-finite update at iteration " + std::to_string(it) + "; returning last good circuit";
      break;
    }
    gates = std::move(next);
  }
  return res;
}

const char* heuristic_name(Heuristic h) { return h == Heuristic::Smpd ? "smpd" : "bmpd"; }

Heuristic heuristic_from_name(const std::string& s) {
  if (s == "smpd") return Heuristic::Smpd;
  if (s == "bmpd") return Heuristic::Bmpd;
  throw std::invalid_argument("unknown heuristic '" + s + "'");
}

const char* optimizer_name(OptimizerKind o) {
  switch (o) {
    case OptimizerKind::None: return "none";
    case OptimizerKind::Ev: return "ev";
    case OptimizerKind::Riemannian: return "riemannian";
  }
  return "none";
}

OptimizerKind optimizer_from_name(const std::string& s) {
  if (s == "none") return OptimizerKind::None;
  if (s == "ev") return OptimizerKind::Ev;
  if (s == "riemannian") return OptimizerKind::Riemannian;
  throw std::invalid_argument("unknown optimizer '" + s + "'");
}

InterleavedResult interleaved_pipeline(const Mps& target, const InterleavedOptions& opt) {
  if (opt.layers < 1) throw std::invalid_argument("interleaved_pipeline: layers must be at least 1");
  auto t0 = Clock::now();
  const Mps tn = normalized_target(target);
  const int n = tn.size();
  InterleavedResult res;
  res.circuit.n_qubits = n;
  for (int l = 0; l < opt.layers; ++l) {
    SimResult r = simulate(inverse(res.circuit), opt.chi_max, 1e-14, tn);
    Mps residual = r.state;
    residual.norm_log -= 0.5 * std::log(norm_squared(residual));
    Circuit layer;
    if (opt.heuristic == Heuristic::Smpd) {
      SmpdConfig cfg = opt.smpd;
      cfg.max_layers = 1;
      cfg.trace_infidelity = false;
      layer = smpd_build(residual, cfg).circuit;
    } else {
      BmpdConfig cfg = opt.bmpd;
      cfg.max_layers = 1;
      cfg.trace_infidelity = false;
      layer = bmpd_build(residual, cfg).circuit;
    }
    for (Gate& g : layer.gates) g.layer = l;
    Circuit grown;
    grown.n_qubits = n;
    grown.metadata = layer.metadata;
    grown.append(layer.gates);
    grown.append(res.circuit.gates);
    res.circuit = std::move(grown);
    res.trace.push_back({l, "heuristic", 0, preparation_infidelity(res.circuit, tn, opt.chi_max), since(t0)});
    if (opt.optimizer == OptimizerKind::None) continue;
    OptimizeResult o = opt.optimizer == OptimizerKind::Ev ? ev_sweep(res.circuit, tn, opt.ev)
                                                          : riemannian_adam(res.circuit, tn, opt.adam);
    res.circuit = std::move(o.circuit);
    for (const HistoryEntry& h : o.history)
      if (h.step > 0) res.trace.push_back({l, "optimized", h.step, h.infidelity, since(t0)});
  }
  return res;
}

}  // namespace mpsprep
