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

#ifndef MPSPREP_LOADER_HPP
#define MPSPREP_LOADER_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mpsprep/mps.hpp"

namespace mpsprep {

/// sum_i s_i 2^-(i+1); s[0] is the coarsest scale.
double quantics_index_to_point(const std::vector<int>& bits);
/// Same map for a packed index whose most significant of n bits is s[0].
double quantics_index_to_point(std::uint64_t index, int n_bits);

/// Function sampled on the 2^-N grid of [0, 1).
struct QuanticsGrid {
  int n_bits = 0;
  double interval_length = 1.0;
  std::function<cplx(double)> f;  // argument is the grid point in [0, 1)

  cplx at(std::uint64_t index) const { return f(quantics_index_to_point(index, n_bits)); }
  VecC dense() const;
};

QuanticsGrid gaussian_amplitudes(int n_bits, double mu = 0.5, double sigma = 0.1, double ell = 1.0);
QuanticsGrid levy_amplitudes(int n_bits, double c = 32.0, double ell = 1073741824.0);
/// Levy density at x > 0 (zero at x <= 0).
double levy_density(double x, double c);

/// Successive truncated SVDs, left to right. Output is left-canonical and
/// normalized; discarded_weight sums the relative weight cut at each bond.
MpsResult dense_to_mps(const VecC& amplitudes, double eps_svd, int chi_max = kUnbounded);

// Tensor cross interpolation ---------------------------------------------------

struct TciOptions {
  double tol = 1e-12;    // target max relative local error
  int chi_max = 64;
  int max_sweeps = 20;   // forward+backward pairs
  std::uint64_t seed = 0;
  bool force_rook = false;
  double max_condition = 1e12;
};

struct TciStats {
  std::uint64_t calls = 0;          // distinct function evaluations
  std::vector<std::uint64_t> calls_per_sweep;
  int sweeps = 0;
  double max_error = 0.0;           // last max_b local error, relative to max |f| seen
  double pivot_residual = 0.0;      // max |mps - f| / max |f| over all pivots
  double max_condition = 0.0;       // worst pivot-matrix condition estimate
  std::vector<int> ranks;
  bool rook = false;
};

struct TciResult {
  Mps mps;  // right-canonical; norm_log carries the scale of f
  TciStats stats;
};

using BitFunction = std::function<cplx(const std::vector<int>&)>;

TciResult tci_build(const BitFunction& f, int n_bits, const TciOptions& opt);
TciResult tci_build(const QuanticsGrid& grid, const TciOptions& opt);

/// Amplitude of a single basis state (bits[0] = first site).
cplx mps_amplitude(const Mps& mps, const std::vector<int>& bits);

// Datasets -----------------------------------------------------------------

struct LorenzParams {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 2.667;
  double t_final = 8.0;          // desk scale; 128 at full scale
  double dt = 1.0 / 4096.0;      // desk scale; 2^-20 at full scale
  std::array<double, 3> x0{0.0, 1.0, 1.05};

  static LorenzParams full_scale();
};

/// Euler trajectory with axes stacked x, y, z, w (w = 0), zero-padded to a
/// power of two per axis and normalized.
VecC lorenz_series(const LorenzParams& p);

/// Stacks the first 2^k values of up to 2^m series, subtracts the mean of the
/// stacked data, zero-pads to 2^(k+m) and normalizes.
VecC stack_series(const std::vector<std::vector<double>>& series, int k, int m);

/// Reads rows (series_id, t, value); an optional non-numeric header is
/// skipped. Series keep their first-appearance order and are sorted by t.
std::vector<std::vector<double>> read_series_csv(const std::string& path);
VecC csv_stacked_amplitudes(const std::string& path, int k, int m);

/// Synthetic market-like corpus: 2^m series of length 2^k whose company index
/// bits are coupled in pairs. pair_of[b] names the partner bit of b.
struct SyntheticCorpus {
  std::vector<std::vector<double>> series;
  std::vector<int> pair_of;
};
SyntheticCorpus synthetic_company_corpus(int k, int m, Rng& rng);

// Ising oracle ---------------------------------------------------------------

struct IsingGround {
  VecC vector;
  double energy = 0.0;
};

/// Ground state of sum S^z S^z - h_x sum S^x (open chain), N <= 14.
/// Dense symmetric eigensolver up to 10 sites, Lanczos above.
IsingGround ising_ground_dense(int n, double h_x);
Mps ising_groundstate_exact(int n, double h_x);
/// H |v> without building the matrix.
VecC ising_apply(int n, double h_x, const VecC& v);

}  // namespace mpsprep

#endif  // MPSPREP_LOADER_HPP
