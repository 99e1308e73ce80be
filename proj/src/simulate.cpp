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

#include "mpsprep/circuit.hpp"

namespace mpsprep {

double apply_gate(Mps& state, const Gate& g, int chi_max, double eps) {
  if (g.arity() == 1) {
    apply_single_site_gate_inplace(state, g.unitary(), g.qubits[0]);
    return 0.0;
  }
  int a = g.qubits[0], b = g.qubits[1];
  if (b == a + 1) return apply_two_site_gate_inplace(state, g.unitary(), a, chi_max, eps);
  if (a == b + 1) return apply_two_site_gate_inplace(state, swap_qubits(g.unitary()), b, chi_max, eps);
  throw std::invalid_argument("simulate: gate on non-adjacent qubits " + std::to_string(a) + "," + std::to_string(b));
}

SimResult simulate(const Circuit& c, int chi_max, double eps) { return simulate(c, chi_max, eps, zero_state(c.n_qubits)); }

SimResult simulate(const Circuit& c, int chi_max, double eps, const Mps& initial) {
  if (initial.size() != c.n_qubits) throw std::invalid_argument("simulate: initial state size mismatch");
  for (const Gate& g : c.gates)
    if (g.is_two_qubit() && std::abs(g.qubits[0] - g.qubits[1]) != 1)
      throw std::invalid_argument("simulate: gate on non-adjacent qubits");
  SimResult r;
  double n0 = norm_squared(initial);
  r.state = initial.gauge.kind == GaugeKind::Mixed ? initial : canonicalize(initial, Gauge::mixed(0));
  for (const Gate& g : c.gates) r.discarded_weight += apply_gate(r.state, g, chi_max, eps);
  r.norm_error = std::abs(norm_squared(r.state) - n0);
  return r;
}

}  // namespace mpsprep
