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

#ifndef MPSPREP_BMPD_HPP
#define MPSPREP_BMPD_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mpsprep/circuit.hpp"

namespace mpsprep {

/// Two-qubit disentangler exp(-i(t0 XX + t1 YY + t2 ZZ)) (a (x) b) with
/// a = exp(-i(t6 X + t7 Y + t8 Z)) on the left qubit and
/// b = exp(-i(t3 X + t4 Y + t5 Z)) on the right one.
struct DisentanglerAnsatz {
  std::array<double, 9> theta{};

  MatC matrix() const;
};

struct BmpdConfig {
  double alpha = 2.0;  // Renyi order
  int max_layers = 1;
  int chi_tilde = 64;
  double eps_svd = 1e-8;
  /// Bonds whose entropy is already below this get no gate. Unset means
  /// eps_svd^2, the weight of a second Schmidt value at the cutoff.
  std::optional<double> entropy_skip_threshold;
  int max_iterations = 1000;
  double gradient_tolerance = 1e-10;
  int restarts = 3;
  std::uint64_t seed = 0;
  bool trace_infidelity = true;
  /// Check the vidal invariants after every gate (costs a full sweep each).
  bool check_gauge = false;

  double skip_threshold() const;
  void validate() const;
};

struct BondOptimum {
  DisentanglerAnsatz ansatz;
  double initial_entropy = 0.0;
  double entropy = 0.0;
  int iterations = 0;
  std::string warning;
};

/// Minimizes the Renyi entropy of bond i after the gate. The MPS must be in
/// vidal gauge; the gate is not applied.
BondOptimum optimize_bond_disentangler(const Mps& mps, int bond, const BmpdConfig& cfg);

/// Renyi entropy of bond i after applying `gate` to sites (i, i+1).
double bond_entropy_after_gate(const Mps& mps, int bond, const MatC& gate, double alpha);

struct BmpdLayerStats {
  int layer = 0;
  VecR bond_entropies;  // after the layer, order alpha
  double total_entropy = 0.0;
  std::array<double, 2> sublayer_total_entropy{};  // after each sublayer
  int two_qubit_gates = 0;
  int max_bond = 1;
  double discarded_weight = 0.0;
  double max_gauge_error = 0.0;  // only with check_gauge
  double product_fidelity = 0.0;  // of the disentangled state with its chi=1 truncation
  double infidelity = 1.0;        // of the circuit built so far (NaN if not traced)
  double seconds = 0.0;
};

struct BmpdResult {
  Circuit circuit;  // preparation order
  std::vector<BmpdLayerStats> trace;
  double initial_total_entropy = 0.0;
  Mps disentangled;  // vidal gauge, before the closing single-qubit layer
  std::vector<std::string> warnings;
};

BmpdResult bmpd_build(const Mps& target, const BmpdConfig& cfg);

std::string bmpd_trace_to_json(const BmpdResult& r);

}  // namespace mpsprep

#endif  // MPSPREP_BMPD_HPP
