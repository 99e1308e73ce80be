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

#ifndef MPSPREP_MPS_HPP
#define MPSPREP_MPS_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mpsprep/linalg.hpp"

namespace mpsprep {

/// One site of an open-boundary tensor train: site[s] is the (chi_left x
/// chi_right) matrix for physical index s.
using Site = std::array<MatC, 2>;

enum class GaugeKind : std::uint8_t { None = 0, Left = 1, Right = 2, Mixed = 3, Vidal = 4 };

struct Gauge {
  GaugeKind kind = GaugeKind::None;
  int center = 0;  // orthogonality center for Mixed

  static Gauge none() { return {GaugeKind::None, 0}; }
  static Gauge left() { return {GaugeKind::Left, 0}; }
  static Gauge right() { return {GaugeKind::Right, 0}; }
  static Gauge mixed(int c) { return {GaugeKind::Mixed, c}; }
  static Gauge vidal() { return {GaugeKind::Vidal, 0}; }

  bool operator==(const Gauge& o) const {
    return kind == o.kind && (kind != GaugeKind::Mixed || center == o.center);
  }
};

std::string gauge_name(const Gauge& g);

/// Matrix product state over qubits.
///
/// The represented vector is exp(norm_log) times the contraction of
/// `tensors`. In vidal gauge `tensors` hold the Gamma tensors and
/// `singular_values[i]` the Schmidt values on the bond between sites i and
/// i+1.
struct Mps {
  std::vector<Site> tensors;
  Gauge gauge;
  std::vector<VecR> singular_values;
  double norm_log = 0.0;

  int size() const { return static_cast<int>(tensors.size()); }
  /// Dimension of the bond between sites b and b+1.
  int bond_dim(int b) const { return static_cast<int>(tensors[static_cast<size_t>(b)][0].cols()); }
  int max_bond() const;
  /// Throws std::invalid_argument on shape mismatches.
  void validate() const;
};

/// A value paired with the weight removed by truncation.
struct MpsResult {
  Mps mps;
  double discarded_weight = 0.0;
};

// Constructors -----------------------------------------------------------

Mps product_state(const std::vector<VecC>& local_states);
Mps zero_state(int n);
Mps ghz_state(int n);
/// Random complex MPS with bonds min(chi, 2^k, 2^(n-k)), right-canonical and
/// normalized.
Mps random_mps(int n, int chi, Rng& rng);

// Gauge ------------------------------------------------------------------

Mps canonicalize(const Mps& mps, Gauge target);
/// Largest violation of the gauge invariant declared by mps.gauge.
double gauge_error(const Mps& mps);
double left_orthonormality_error(const Site& a);
double right_orthonormality_error(const Site& a);
/// Moves the orthogonality center of a mixed-gauge MPS in place.
void move_center(Mps& mps, int target);

// Truncation -------------------------------------------------------------

/// Bond truncation keeping at most chi_max values above eps * max per bond.
/// Output keeps the canonical gauge of the input (left for gauge none).
MpsResult truncate(const Mps& mps, int chi_max, double eps);

// Diagnostics ------------------------------------------------------------

/// Normalized Schmidt values on each of the N-1 bonds.
std::vector<VecR> schmidt_values(const Mps& mps);

struct Entropy {
  enum class Kind { VonNeumann, Renyi };
  Kind kind = Kind::VonNeumann;
  double alpha = 1.0;

  static Entropy von_neumann() { return {Kind::VonNeumann, 1.0}; }
  /// alpha may be +infinity; alpha == 1 is rejected.
  static Entropy renyi(double alpha);
};

double spectrum_entropy(const VecR& schmidt, Entropy e);
VecR bond_entropy_profile(const Mps& mps, Entropy e);

struct QmiMatrix {
  MatR values;
  int size() const { return static_cast<int>(values.rows()); }
};

QmiMatrix qmi_matrix(const Mps& mps);

/// <a|b> including both norm_log factors.
cplx overlap(const Mps& a, const Mps& b);
double norm_squared(const Mps& mps);
/// |<a|b>|^2 / (<a|a><b|b>).
double fidelity(const Mps& a, const Mps& b);
/// -ln|<target|prepared>| / N; +infinity on zero overlap.
double negative_log_fidelity_per_site(const Mps& target, const Mps& prepared);

// Gates ------------------------------------------------------------------

MpsResult apply_two_site_gate(const Mps& mps, const MatC& gate, int site, int chi_max,
                              double eps);
/// In-place variant used by the simulators; returns discarded weight.
double apply_two_site_gate_inplace(Mps& mps, const MatC& gate, int site, int chi_max,
                                   double eps);
void apply_single_site_gate_inplace(Mps& mps, const MatC& gate, int site);

// Dense conversion and IO --------------------------------------------------

/// Full amplitude vector, s_1 most significant. Requires N <= 24.
VecC to_dense(const Mps& mps);

void write_mps(const std::string& path, const Mps& mps);
Mps read_mps(const std::string& path);
void write_dense(const std::string& path, const VecC& amplitudes);
VecC read_dense(const std::string& path);

constexpr int kMaxDenseQubits = 24;
constexpr int kUnbounded = std::numeric_limits<int>::max();

}  // namespace mpsprep

#endif  // MPSPREP_MPS_HPP
