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

#ifndef MPSPREP_OPTIMIZE_HPP
#define MPSPREP_OPTIMIZE_HPP

#include <string>
#include <vector>

#include "mpsprep/bmpd.hpp"
#include "mpsprep/circuit.hpp"
#include "mpsprep/smpd.hpp"

namespace mpsprep {

// Environments ---------------------------------------------------------------
//
// For a circuit C = U_M ... U_1 and target |t>, the environment of gate m is
// F_m = Tr_rest |t_m><psi_{m-1}| with psi_{m-1} = U_{m-1}...U_1|0> and
// t_m = U_{m+1}^dag ... U_M^dag |t>, in the gate's qubit order. It satisfies
// Tr(U_m^dag F_m) = <C 0|t>.

/// Contracts |a><b| over every qubit outside `qubits` (one or two adjacent).
MatC transition_environment(const Mps& a, const Mps& b, const std::vector<int>& qubits);

/// Environment of gate m (0-based) from scratch; boundary states are held
/// at chi_max. The target is used as given (not normalized).
MatC environment(const Circuit& c, int m, const Mps& target, int chi_max);

// Evenbly-Vidal --------------------------------------------------------------

struct EvUpdate {
  MatC u;
  bool zero_environment = false;
};

/// U'' = U (U^dag X Y)^beta with F = X D Y; beta in (0, 1].
EvUpdate ev_update(const MatC& u, const MatC& f, double beta);

struct EvOptions {
  double beta = 0.6;
  int n_sweeps = 100;
  int chi_max = 64;
  double eps_svd = 1e-14;
  bool absorb = true;  // merge adjacent gates first
  /// Record |<C 0|t>| after every single gate update.
  bool record_updates = false;
};

struct HistoryEntry {
  int step = 0;  // sweep or iteration; 0 is the starting circuit
  double infidelity = 1.0;
  double seconds = 0.0;
};

struct OptimizeResult {
  Circuit circuit;
  std::vector<HistoryEntry> history;
  std::vector<double> update_overlaps;  // only with record_updates
  std::string warning;
};

/// Forward then backward visit of every variational gate per sweep. CNOTs
/// stay fixed; rotations become generic gates when updated.
OptimizeResult ev_sweep(const Circuit& c, const Mps& target, const EvOptions& opt);

// Riemannian -----------------------------------------------------------------

/// Projection of v onto the tangent space of the Stiefel manifold at u.
MatC stiefel_projection(const MatC& u, const MatC& v);
/// Riemannian gradient of a Euclidean gradient at u.
MatC riemannian_gradient(const MatC& u, const MatC& egrad);
/// X Y from the SVD X D Y of u + v; a 1e-14 identity jitter is added when
/// u + v is rank deficient.
MatC svd_retraction(const MatC& u, const MatC& v);

/// Gradient of 1 - |f|^2 with f = Tr(U^dag F): returns G = -2 conj(f) F so
/// that d(1 - |f|^2) = Re Tr(G^dag dU).
MatC euclidean_fidelity_gradient(const MatC& f_env, cplx overlap);

struct AdamOptions {
  double lr = 1e-4;
  int n_iter = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int chi_max = 64;
  double eps_svd = 1e-14;
  bool absorb = true;
};

/// Riemannian Adam over all variational gates at once. The second moment is
/// one scalar per gate; momenta are transported by projection.
OptimizeResult riemannian_adam(const Circuit& c, const Mps& target, const AdamOptions& opt);

// Interleaved construction ---------------------------------------------------

enum class Heuristic { Smpd, Bmpd };
enum class OptimizerKind { None, Ev, Riemannian };

const char* heuristic_name(Heuristic h);
Heuristic heuristic_from_name(const std::string& s);
const char* optimizer_name(OptimizerKind o);
OptimizerKind optimizer_from_name(const std::string& s);

struct InterleavedOptions {
  Heuristic heuristic = Heuristic::Smpd;
  OptimizerKind optimizer = OptimizerKind::Ev;
  int layers = 1;
  SmpdConfig smpd;  // max_layers is ignored
  BmpdConfig bmpd;  // max_layers is ignored
  EvOptions ev;
  AdamOptions adam;
  int chi_max = 64;  // residual and infidelity simulations
};

struct InterleavedRow {
  int layer = 0;
  std::string stage;  // "heuristic" or "optimized"
  int step = 0;
  double infidelity = 1.0;
  double seconds = 0.0;
};

struct InterleavedResult {
  Circuit circuit;
  std::vector<InterleavedRow> trace;
};

/// Adds one heuristic layer for the residual state, re-optimizes the whole
/// circuit, and repeats.
InterleavedResult interleaved_pipeline(const Mps& target, const InterleavedOptions& opt);

}  // namespace mpsprep

#endif  // MPSPREP_OPTIMIZE_HPP
