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

#ifndef MPSPREP_LINALG_HPP
#define MPSPREP_LINALG_HPP

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace mpsprep {

using cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;
using MatR = Eigen::MatrixXd;

using Rng = std::mt19937_64;

/// Thin SVD A = U * diag(S) * V^dagger with S sorted descending.
///
/// Each column of U is rotated so that its largest-magnitude entry (first
/// index on ties) is real and positive; V absorbs the same phase so the
/// product is unchanged. This makes factors reproducible across runs.
struct Svd {
  MatC U;
  VecR S;
  MatC V;
};

Svd svd(const MatC& a);

/// Number of singular values to keep: those above eps * S(0), capped by
/// chi_max. Always at least one when S(0) > 0.
int truncation_rank(const VecR& s, int chi_max, double eps);

/// Sum of squared singular values beyond `keep`.
double discarded_weight(const VecR& s, int keep);

// Single-qubit operators.
MatC pauli_x();
MatC pauli_y();
MatC pauli_z();
MatC rx(double theta);
MatC ry(double theta);
MatC rz(double theta);
MatC cnot_matrix();  // control on the first (most significant) qubit
MatC swap_matrix();

MatC kron(const MatC& a, const MatC& b);

/// exp(i * H) for Hermitian H.
MatC expi_hermitian(const MatC& h);

/// U^beta for a unitary U via its Schur form; eigenphases in (-pi, pi].
MatC unitary_power(const MatC& u, double beta);

/// Columns of `a` orthonormal (a^dagger a = 1) to `tol`.
bool is_isometry(const MatC& a, double tol);
bool is_unitary(const MatC& a, double tol);
double unitarity_error(const MatC& a);

/// Haar-random unitary of size n (QR of a complex Ginibre matrix with the
/// diagonal phase of R removed).
MatC haar_unitary(int n, Rng& rng);

/// Random complex Gaussian matrix (unit variance per complex entry).
MatC random_complex(int rows, int cols, Rng& rng);

/// Extend orthonormal columns of `a` (n x k) to an n x n unitary using
/// modified Gram-Schmidt against canonical basis vectors. At each step the
/// basis vector with the largest residual is taken (lowest index on ties).
MatC complete_to_unitary(const MatC& a);

/// Two-qubit gate with the qubit order swapped.
MatC swap_qubits(const MatC& g);

}  // namespace mpsprep

#endif  // MPSPREP_LINALG_HPP
