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

#ifndef MPSPREP_CIRCUIT_HPP
#define MPSPREP_CIRCUIT_HPP

#include <map>
#include <string>
#include <vector>

#include "mpsprep/mps.hpp"

namespace mpsprep {

enum class GateKind { Generic1, Generic2, Cnot, Rx, Ry, Rz };

const char* gate_kind_name(GateKind k);

/// One gate. Two-qubit matrices use the basis index 2*s_a + s_b for
/// qubits = {a, b}; for CNOT, qubits = {control, target}.
struct Gate {
  GateKind kind = GateKind::Generic1;
  std::vector<int> qubits;
  MatC matrix;         // Generic1 / Generic2 only
  double angle = 0.0;  // rotations only
  int layer = -1;      // provenance: construction layer
  std::string origin;  // provenance: emitting module

  static Gate generic(const MatC& m, std::vector<int> qubits);
  static Gate cnot(int control, int target);
  static Gate rotation(GateKind kind, int qubit, double angle);

  int arity() const { return static_cast<int>(qubits.size()); }
  bool is_two_qubit() const { return qubits.size() == 2; }
  /// Variational gates are the ones the optimizers may change.
  bool variational() const { return kind != GateKind::Cnot; }
  /// 2x2 or 4x4 unitary in the qubit order of `qubits`.
  MatC unitary() const;
  Gate adjoint() const;
};

/// Ordered gate list; gates[0] acts first on |0...0>.
struct Circuit {
  int n_qubits = 0;
  std::vector<Gate> gates;
  std::map<std::string, std::string> metadata;

  void append(const Gate& g) { gates.push_back(g); }
  void append(const std::vector<Gate>& gs) { gates.insert(gates.end(), gs.begin(), gs.end()); }
  /// Throws std::invalid_argument on out-of-range qubits, repeated qubits or
  /// non-unitary matrices (tolerance 1e-10).
  void validate() const;
  int count(GateKind k) const;
  int two_qubit_count() const;
};

/// Reversed order with every gate replaced by its adjoint.
Circuit inverse(const Circuit& c);

// Serialization ------------------------------------------------------------

std::string circuit_to_json(const Circuit& c);
Circuit circuit_from_json(const std::string& text);
void write_circuit(const std::string& path, const Circuit& c);
Circuit read_circuit(const std::string& path);
/// OpenQASM 2; throws for Generic2 gates.
std::string circuit_to_qasm(const Circuit& c);

// Decompositions -------------------------------------------------------------

/// Exact 3-CNOT decomposition of a two-qubit unitary acting on (q0, q1).
/// The product of the returned gates equals u (global phase included).
std::vector<Gate> decompose_su4(const MatC& u, int q0, int q1);

/// Exact 2-CNOT circuit for a 4x2 isometry whose input enters on one qubit
/// while the other (the ancilla) starts in |0>. With ancilla_first the
/// columns are u[:, {0,1}] of a gate on (q0, q1) with q0 the ancilla;
/// otherwise the columns are u[:, {0,2}] with q1 the ancilla.
std::vector<Gate> decompose_isometry_1to2(const MatC& iso, bool ancilla_first, int q0, int q1);

/// Product of a gate list supported on {q0, q1}, as a 4x4 matrix in the
/// order (q0, q1).
MatC gates_unitary(const std::vector<Gate>& gates, int q0, int q1);

/// Replaces every Generic2 gate by decompose_su4.
Circuit lower_generic_gates(const Circuit& c);

// Transpilation and metrics -------------------------------------------------

/// Merges gates whose support contains the support of an adjacent gate on
/// the same wires. CNOTs are never merged into other gates; two identical
/// adjacent CNOTs cancel.
Circuit absorb_adjacent_gates(const Circuit& c);

struct CnotMetrics {
  int n_cnot = 0;
  int d_cnot = 0;
};

/// CNOT count and ASAP CNOT depth; single-qubit gates are free. Throws if a
/// Generic2 gate remains.
CnotMetrics cnot_metrics(const Circuit& c);
/// ASAP depth counting every two-qubit gate as one layer.
int two_qubit_depth(const Circuit& c);

// Simulation ----------------------------------------------------------------

struct SimResult {
  Mps state;
  double discarded_weight = 0.0;
  double norm_error = 0.0;  // | <psi|psi> - <psi0|psi0> |
};

/// Applies gates through the MPS gate routines (mixed gauge). Two-qubit gates
/// must act on adjacent qubits.
SimResult simulate(const Circuit& c, int chi_max, double eps_svd);
SimResult simulate(const Circuit& c, int chi_max, double eps_svd, const Mps& initial);
/// Applies one gate in place; returns discarded weight.
double apply_gate(Mps& state, const Gate& g, int chi_max, double eps_svd);

}  // namespace mpsprep

#endif  // MPSPREP_CIRCUIT_HPP
