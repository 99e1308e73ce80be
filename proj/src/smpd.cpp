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

#include "mpsprep/smpd.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/QR>

#include "json.hpp"

namespace mpsprep {

namespace {

// Relative singular-value floor while evolving the disentangled state.
constexpr double kStateEps = 1e-14;

MatC stack_rows(const Site& a) {
  MatC m(2 * a[0].rows(), a[0].cols());
  m << a[0], a[1];
  return m;
}

MatC stack_cols(const Site& a) {
  MatC m(a[0].rows(), 2 * a[0].cols());
  m << a[0], a[1];
  return m;
}

Site unstack_rows(const MatC& m) {
  Eigen::Index r = m.rows() / 2;
  return {m.topRows(r), m.bottomRows(r)};
}

Site unstack_cols(const MatC& m) {
  Eigen::Index c = m.cols() / 2;
  return {m.leftCols(c), m.rightCols(c)};
}

// Rank-2 truncation around the bond (c-1, c): sites < c left-orthonormal,
// sites >= c right-orthonormal, normalized Schmidt values in `lambda`.
struct Split {
  std::vector<Site> t;
  VecR lambda;
};

Split mixed_rank2(const Mps& psi, int c, double eps) {
  const int n = psi.size();
  Mps m = canonicalize(psi, Gauge::right());
  std::vector<Site>& t = m.tensors;
  for (int i = 0; i + 1 < c; ++i) {
    Svd d = svd(stack_rows(t[static_cast<size_t>(i)]));
    int keep = truncation_rank(d.S, 2, eps);
    VecR s = d.S.head(keep);
    s /= s.norm();
    t[static_cast<size_t>(i)] = unstack_rows(d.U.leftCols(keep));
    MatC r = s.cast<cplx>().asDiagonal() * d.V.leftCols(keep).adjoint();
    for (auto& x : t[static_cast<size_t>(i + 1)]) x = (r * x).eval();
  }
  for (int i = c - 1; i + 1 < n; ++i) {
    MatC a = stack_rows(t[static_cast<size_t>(i)]);
    Eigen::HouseholderQR<MatC> qr(a);
    Eigen::Index k = std::min(a.rows(), a.cols());
    MatC q = qr.householderQ() * MatC::Identity(a.rows(), k);
    MatC r = q.adjoint() * a;
    t[static_cast<size_t>(i)] = unstack_rows(q);
    for (auto& x : t[static_cast<size_t>(i + 1)]) x = (r * x).eval();
  }
  Split out;
  for (int i = n - 1; i >= c; --i) {
    Svd d = svd(stack_cols(t[static_cast<size_t>(i)]));
    int keep = truncation_rank(d.S, 2, eps);
    VecR s = d.S.head(keep);
    s /= s.norm();
    t[static_cast<size_t>(i)] = unstack_cols(d.V.leftCols(keep).adjoint());
    if (i == c) {
      for (auto& x : t[static_cast<size_t>(i - 1)]) x = (x * d.U.leftCols(keep)).eval();
      out.lambda = s;
    } else {
      MatC l = d.U.leftCols(keep) * s.cast<cplx>().asDiagonal();
      for (auto& x : t[static_cast<size_t>(i - 1)]) x = (x * l).eval();
    }
  }
  out.t = std::move(t);
  return out;
}

MatC first_two_columns(const MatC& iso) {
  if (iso.cols() == 2) return iso;
  return complete_to_unitary(iso).leftCols(2);
}

Gate single_gate(const MatC& cols, int q) { return Gate::generic(complete_to_unitary(cols), {q}); }

// Two-qubit gate on (q0, q0+1) acting on an ancilla in |0> and one input
// qubit; `iso` holds up to two input columns.
std::vector<Gate> pair_gate(const MatC& iso, bool ancilla_first, int q0, bool decompose) {
  MatC iso2 = first_two_columns(iso);
  if (decompose) return decompose_isometry_1to2(iso2, ancilla_first, q0, q0 + 1);
  MatC u = complete_to_unitary(iso2);
  if (!ancilla_first) {
    // Inputs live in columns 0 and 2 when the second qubit is the ancilla.
    MatC p = u;
    p.col(1) = u.col(2);
    p.col(2) = u.col(1);
    u = p;
  }
  return {Gate::generic(u, {q0, q0 + 1})};
}

// Site k of the left-orthonormal part: gate on (k-1, k) mapping |0>|b> to
// sum A[s](a, b) |a>|s>.
MatC left_iso(const Site& a) {
  MatC m = MatC::Zero(4, a[0].cols());
  for (int s = 0; s < 2; ++s)
    for (Eigen::Index x = 0; x < a[0].rows(); ++x) m.row(2 * x + s) = a[static_cast<size_t>(s)].row(x);
  return m;
}

// Site k of the right-orthonormal part: gate on (k, k+1) mapping |a>|0> to
// sum B[s](a, b) |s>|b>.
MatC right_iso(const Site& b) {
  MatC m = MatC::Zero(4, b[0].rows());
  for (int s = 0; s < 2; ++s)
    for (Eigen::Index y = 0; y < b[0].cols(); ++y) m.row(2 * s + y) = b[static_cast<size_t>(s)].col(y).transpose();
  return m;
}

}  // namespace

const char* smpd_gauge_name(SmpdGauge g) {
  switch (g) {
    case SmpdGauge::Left: return "left";
    case SmpdGauge::Right: return "right";
    case SmpdGauge::Mixed: return "mixed";
  }
  return "?";
}

SmpdGauge smpd_gauge_from_name(const std::string& s) {
  if (s == "left") return SmpdGauge::Left;
  if (s == "right") return SmpdGauge::Right;
  if (s == "mixed") return SmpdGauge::Mixed;
  throw std::invalid_argument("unknown SMPD gauge '" + s + "'");
}

ULambda u_lambda_gate(double l1, double l2) {
  if (!(l1 > 0.0) || l2 < 0.0 || l2 > l1 + 1e-15)
    throw std::invalid_argument("u_lambda_gate: need l1 >= l2 >= 0 and l1 > 0");
  if (std::abs(l1 * l1 + l2 * l2 - 1.0) > 1e-12) throw std::invalid_argument("u_lambda_gate: values not normalized");
  ULambda u;
  u.theta = 2.0 * std::atan(l2 / l1);
  u.matrix = cnot_matrix() * kron(ry(u.theta), MatC::Identity(2, 2));
  return u;
}

Rank2Layer rank2_layer(const Mps& psi_d, const SmpdConfig& cfg) {
  const int n = psi_d.size();
  if (n < 1) throw std::invalid_argument("rank2_layer: empty MPS");
  double nrm = norm_squared(psi_d);
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw std::invalid_argument("rank2_layer: state is not normalizable");

  int c = 0;
  switch (cfg.gauge) {
    case SmpdGauge::Left: c = n; break;
    case SmpdGauge::Right: c = 0; break;
    case SmpdGauge::Mixed: c = cfg.center < 0 ? n / 2 : cfg.center; break;
  }
  if (c < 0 || c > n) throw std::invalid_argument("rank2_layer: center out of range");
  if (cfg.gauge == SmpdGauge::Mixed && c == n && n > 1) throw std::invalid_argument("rank2_layer: center out of range");

  std::vector<Site> t;
  VecR lambda;
  Rank2Layer out;
  if (c == n) {
    Mps m = canonicalize(truncate(psi_d, 2, cfg.eps_svd).mps, Gauge::left());
    t = m.tensors;
    out.psi2 = m;
  } else if (c == 0) {
    Mps m = canonicalize(truncate(psi_d, 2, cfg.eps_svd).mps, Gauge::right());
    t = m.tensors;
    out.psi2 = m;
  } else {
    Split sp = mixed_rank2(psi_d, c, cfg.eps_svd);
    t = std::move(sp.t);
    lambda = sp.lambda;
    out.psi2.tensors = t;
    for (auto& x : out.psi2.tensors[static_cast<size_t>(c)]) x = (lambda.cast<cplx>().asDiagonal() * x).eval();
    out.psi2.gauge = Gauge::mixed(c);
  }
  out.psi2.norm_log = 0.0;
  out.psi2.singular_values.clear();

  const bool skip = cfg.skip_disentangled_bonds;
  auto& g = out.gates;
  auto add = [&](std::vector<Gate> gs, bool two) {
    for (auto& x : gs) x.origin = "smpd";
    g.insert(g.end(), gs.begin(), gs.end());
    out.two_qubit_gates += two;
  };
  auto chi_l = [&](int k) { return static_cast<int>(t[static_cast<size_t>(k)][0].rows()); };
  auto chi_r = [&](int k) { return static_cast<int>(t[static_cast<size_t>(k)][0].cols()); };

  if (c > 0 && c < n && (lambda.size() == 2 || !skip)) {
    double l1 = lambda(0), l2 = lambda.size() == 2 ? lambda(1) : 0.0;
    ULambda u = u_lambda_gate(l1, l2);
    add({Gate::rotation(GateKind::Ry, c - 1, u.theta), Gate::cnot(c - 1, c)}, true);
  }
  // Right-orthonormal part, left to right.
  for (int k = c; k + 1 < n; ++k) {
    const Site& b = t[static_cast<size_t>(k)];
    if (skip && chi_r(k) == 1) {
      MatC cols(2, chi_l(k));
      for (int s = 0; s < 2; ++s) cols.row(s) = b[static_cast<size_t>(s)].col(0).transpose();
      add({single_gate(cols, k)}, false);
    } else {
      add(pair_gate(right_iso(b), false, k, cfg.decompose_isometries), true);
    }
  }
  // Left-orthonormal part, right to left.
  for (int k = c - 1; k >= 1; --k) {
    const Site& a = t[static_cast<size_t>(k)];
    if (skip && chi_l(k) == 1) {
      MatC cols(2, chi_r(k));
      for (int s = 0; s < 2; ++s) cols.row(s) = a[static_cast<size_t>(s)].row(0);
      add({single_gate(cols, k)}, false);
    } else {
      add(pair_gate(left_iso(a), true, k - 1, cfg.decompose_isometries), true);
    }
  }
  if (c < n) {
    const Site& b = t[static_cast<size_t>(n - 1)];
    MatC cols(2, chi_l(n - 1));
    for (int s = 0; s < 2; ++s) cols.row(s) = b[static_cast<size_t>(s)].col(0).transpose();
    add({single_gate(cols, n - 1)}, false);
  }
  if (c > 0) {
    const Site& a = t[0];
    MatC cols(2, chi_r(0));
    for (int s = 0; s < 2; ++s) cols.row(s) = a[static_cast<size_t>(s)].row(0);
    add({single_gate(cols, 0)}, false);
  }
  return out;
}

double preparation_infidelity(const Circuit& c, const Mps& target, int chi_max) {
  SimResult r = simulate(c, chi_max, kStateEps);
  return 1.0 - std::norm(overlap(target, r.state)) / norm_squared(target);
}

SmpdResult smpd_build(const Mps& target, const SmpdConfig& cfg) {
  if (cfg.max_layers < 1) throw std::invalid_argument("smpd_build: max_layers must be at least 1");
  if (cfg.chi_tilde < 2) throw std::invalid_argument("smpd_build: chi_tilde must be at least 2");
  const int n = target.size();
  double n0 = norm_squared(target);
  if (!(n0 > 0.0) || !std::isfinite(n0)) throw std::invalid_argument("smpd_build: target is not normalizable");
  Mps goal = canonicalize(target, Gauge::mixed(0));
  goal.norm_log -= 0.5 * std::log(n0);
  const Mps zero = zero_state(n);

  SmpdResult res;
  res.circuit.n_qubits = n;
  res.circuit.metadata["origin"] = "smpd";
  res.circuit.metadata["gauge"] = smpd_gauge_name(cfg.gauge);
  Mps psi_d = goal;
  std::vector<std::vector<Gate>> layers;
  for (int l = 0; l < cfg.max_layers; ++l) {
    if (cfg.stop_fidelity && fidelity(psi_d, zero) >= *cfg.stop_fidelity) break;
    auto t0 = std::chrono::steady_clock::now();
    SmpdLayerStats st;
    st.layer = l;
    st.norm_squared = norm_squared(psi_d);
    Mps psi_n = psi_d;
    psi_n.norm_log -= 0.5 * std::log(st.norm_squared);
    Rank2Layer layer = rank2_layer(psi_n, cfg);
    st.rank2_fidelity = fidelity(layer.psi2, psi_n);
    st.two_qubit_gates = layer.two_qubit_gates;
    for (auto& g : layer.gates) g.layer = l;

    Circuit inv;
    inv.n_qubits = n;
    inv.gates = layer.gates;
    inv = inverse(inv);
    SimResult sim = simulate(inv, cfg.chi_tilde, kStateEps, psi_d);
    psi_d = std::move(sim.state);
    st.discarded_weight = sim.discarded_weight;
    st.max_bond = psi_d.max_bond();
    layers.push_back(std::move(layer.gates));

    res.circuit.gates.clear();
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) res.circuit.append(*it);
    st.infidelity = cfg.trace_infidelity ? preparation_infidelity(res.circuit, goal, cfg.chi_tilde)
                                         : std::numeric_limits<double>::quiet_NaN();
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.trace.push_back(st);
  }
  res.disentangled = psi_d;
  return res;
}

std::string smpd_trace_to_json(const std::vector<SmpdLayerStats>& trace) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : trace) {
    nlohmann::json e;
    e["layer"] = s.layer;
    e["norm_squared"] = s.norm_squared;
    e["rank2_fidelity"] = s.rank2_fidelity;
    if (std::isfinite(s.infidelity)) {
      e["infidelity"] = s.infidelity;
    } else {
      e["infidelity"] = nullptr;
    }
    e["two_qubit_gates"] = s.two_qubit_gates;
    e["max_bond"] = s.max_bond;
    e["discarded_weight"] = s.discarded_weight;
    e["seconds"] = s.seconds;
    j.push_back(e);
  }
  return j.dump(2);
}

}  // namespace mpsprep
