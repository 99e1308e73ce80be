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

#ifndef MPSPREP_SMPD_HPP
#define MPSPREP_SMPD_HPP

#include <optional>
#include <string>
#include <vector>

#include "mpsprep/circuit.hpp"

namespace mpsprep {

enum class SmpdGauge { Left, Right, Mixed };

const char* smpd_gauge_name(SmpdGauge g);
SmpdGauge smpd_gauge_from_name(const std::string& s);

struct SmpdConfig {
  SmpdGauge gauge = SmpdGauge::Mixed;
  /// Mixed gauge only: the two-value bond sits between sites center-1 and
  /// center. -1 selects N/2; 0 degenerates to the right gauge.
  int center = -1;
  int max_layers = 1;
  int chi_tilde = 64;
  double eps_svd = 1e-8;
  /// Bonds of rank one at eps_svd get single-qubit gates only.
  bool skip_disentangled_bonds = true;
  /// Emit two-qubit gates as 2-CNOT isometry circuits instead of Generic2.
  bool decompose_isometries = false;
  std::optional<double> stop_fidelity;
  /// Simulate the growing circuit after every layer to record the true
  /// preparation infidelity.
  bool trace_infidelity = true;
};

struct Rank2Layer {
  std::vector<Gate> gates;  // preparation order, acting on |0...0>
  Mps psi2;                 // normalized rank-2 truncation that the gates prepare
  int two_qubit_gates = 0;
};

/// One staircase layer that prepares the rank-2 truncation of psi_d.
Rank2Layer rank2_layer(const Mps& psi_d, const SmpdConfig& cfg);

struct ULambda {
  double theta = 0.0;
  MatC matrix;  // CNOT * (RY(theta) (x) 1)
};

/// Maps |00> to l1|00> + l2|11>; requires l1 >= l2 >= 0, l1 > 0 and
/// l1^2 + l2^2 = 1 to 1e-12.
ULambda u_lambda_gate(double l1, double l2);

struct SmpdLayerStats {
  int layer = 0;
  double norm_squared = 1.0;    // <psi_d|psi_d> before normalization
  double rank2_fidelity = 1.0;  // |<psi_d,chi=2|psi_d>|^2
  double infidelity = 1.0;      // of the circuit built so far (NaN if not traced)
  int two_qubit_gates = 0;
  int max_bond = 1;             // of psi_d after disentangling
  double discarded_weight = 0.0;
  double seconds = 0.0;
};

struct SmpdResult {
  Circuit circuit;  // layers in preparation order
  std::vector<SmpdLayerStats> trace;
  Mps disentangled;  // psi_d after the last layer, not normalized
};

SmpdResult smpd_build(const Mps& target, const SmpdConfig& cfg);

/// Preparation infidelity 1 - |<target|C|0>|^2 / <target|target> with the
/// circuit simulated at chi_max.
double preparation_infidelity(const Circuit& c, const Mps& target, int chi_max);

std::string smpd_trace_to_json(const std::vector<SmpdLayerStats>& trace);

}  // namespace mpsprep

#endif  // MPSPREP_SMPD_HPP
