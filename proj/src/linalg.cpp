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

#include "mpsprep/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace mpsprep {

Svd svd(const MatC& a) {
  if (!a.allFinite()) throw std::runtime_error("svd: non-finite input");
  Svd out;
  if (a.rows() == 0 || a.cols() == 0) {
    out.U = MatC(a.rows(), 0);
    out.S = VecR(0);
    out.V = MatC(a.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<MatC> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.U = dec.matrixU();
  out.S = dec.singularValues();
  out.V = dec.matrixV();
  for (Eigen::Index k = 0; k < out.U.cols(); ++k) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < out.U.rows(); ++r) {
      double m = std::abs(out.U(r, k));
      if (m > best * (1.0 + 1e-12) + 1e-300) {
        best = m;
        imax = r;
      }
    }
    if (best <= 0.0) continue;
    cplx phase = std::conj(out.U(imax, k)) / best;
    out.U.col(k) *= phase;
    out.V.col(k) *= phase;
  }
  return out;
}

int truncation_rank(const VecR& s, int chi_max, double eps) {
  if (s.size() == 0) return 0;
  int keep = 0;
  double cut = eps * s(0);
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) > cut) keep = static_cast<int>(k) + 1;
  }
  if (s(0) > 0.0) keep = std::max(keep, 1);
  return std::min(keep, chi_max);
}

double discarded_weight(const VecR& s, int keep) {
  double w = 0.0;
  for (Eigen::Index k = keep; k < s.size(); ++k) w += s(k) * s(k);
  return w;
}

MatC pauli_x() {
  MatC m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

MatC pauli_y() {
  MatC m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

MatC pauli_z() {
  MatC m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

MatC rx(double t) {
  MatC m(2, 2);
  double c = std::cos(t / 2), s = std::sin(t / 2);
  m << c, cplx(0, -s), cplx(0, -s), c;
  return m;
}

MatC ry(double t) {
  MatC m(2, 2);
  double c = std::cos(t / 2), s = std::sin(t / 2);
  m << c, -s, s, c;
  return m;
}

MatC rz(double t) {
  MatC m = MatC::Zero(2, 2);
  m(0, 0) = std::polar(1.0, -t / 2);
  m(1, 1) = std::polar(1.0, t / 2);
  return m;
}

MatC cnot_matrix() {
  MatC m = MatC::Zero(4, 4);
  m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
  return m;
}

MatC swap_matrix() {
  MatC m = MatC::Zero(4, 4);
  m(0, 0) = m(1, 2) = m(2, 1) = m(3, 3) = 1.0;
  return m;
}

MatC kron(const MatC& a, const MatC& b) {
  MatC out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

MatC expi_hermitian(const MatC& h) {
  Eigen::SelfAdjointEigenSolver<MatC> es(h);
  VecC ph(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < ph.size(); ++k) ph(k) = std::polar(1.0, es.eigenvalues()(k));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

MatC unitary_power(const MatC& u, double beta) {
  Eigen::ComplexSchur<MatC> schur(u);
  const MatC& q = schur.matrixU();
  const MatC& t = schur.matrixT();
  VecC d(t.rows());
  for (Eigen::Index k = 0; k < t.rows(); ++k) {
    double phi = std::arg(t(k, k));
    d(k) = std::polar(1.0, beta * phi);
  }
  return q * d.asDiagonal() * q.adjoint();
}

double unitarity_error(const MatC& a) {
  MatC g = a.adjoint() * a;
  return (g - MatC::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

bool is_isometry(const MatC& a, double tol) { return unitarity_error(a) <= tol; }

bool is_unitary(const MatC& a, double tol) {
  return a.rows() == a.cols() && unitarity_error(a) <= tol;
}

MatC random_complex(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  MatC m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cplx(nd(rng), nd(rng));
  return m;
}

MatC haar_unitary(int n, Rng& rng) {
  MatC z = random_complex(n, n, rng);
  Eigen::HouseholderQR<MatC> qr(z);
  MatC q = qr.householderQ() * MatC::Identity(n, n);
  MatC r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < n; ++k) {
    double m = std::abs(r(k, k));
    if (m > 0) q.col(k) *= r(k, k) / m;
  }
  return q;
}

MatC complete_to_unitary(const MatC& a) {
  const Eigen::Index n = a.rows();
  MatC out(n, n);
  Eigen::Index k = a.cols();
  out.leftCols(k) = a;
  std::vector<bool> used(static_cast<size_t>(n), false);
  while (k < n) {
    Eigen::Index pick = -1;
    double best = -1.0;
    VecC best_vec;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      VecC v = VecC::Zero(n);
      v(j) = 1.0;
      // Two passes of modified Gram-Schmidt.
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index c = 0; c < k; ++c) v -= out.col(c).dot(v) * out.col(c);
      double nv = v.norm();
      if (nv > best * (1.0 + 1e-12)) {
        best = nv;
        pick = j;
        best_vec = v;
      }
    }
    if (pick < 0 || best < 1e-8) throw std::runtime_error("complete_to_unitary: degenerate input");
    used[static_cast<size_t>(pick)] = true;
    out.col(k) = best_vec / best;
    ++k;
  }
  return out;
}

MatC swap_qubits(const MatC& g) {
  MatC s = swap_matrix();
  return s * g * s;
}

}  // namespace mpsprep
