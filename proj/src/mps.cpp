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

#include "mpsprep/mps.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace mpsprep {

namespace {

constexpr double kVidalZero = 1e-12;

MatC stack_rows(const Site& a) {
  MatC m(2 * a[0].rows(), a[0].cols());
  m.topRows(a[0].rows()) = a[0];
  m.bottomRows(a[1].rows()) = a[1];
  return m;
}

MatC stack_cols(const Site& a) {
  MatC m(a[0].rows(), 2 * a[0].cols());
  m.leftCols(a[0].cols()) = a[0];
  m.rightCols(a[1].cols()) = a[1];
  return m;
}

Site unstack_rows(const MatC& m) {
  Eigen::Index h = m.rows() / 2;
  return {m.topRows(h), m.bottomRows(h)};
}

Site unstack_cols(const MatC& m) {
  Eigen::Index w = m.cols() / 2;
  return {m.leftCols(w), m.rightCols(w)};
}

struct Qr {
  MatC q;
  MatC r;
};

Qr thin_qr(const MatC& m) {
  Eigen::HouseholderQR<MatC> qr(m);
  Eigen::Index k = std::min(m.rows(), m.cols());
  Qr out;
  out.q = qr.householderQ() * MatC::Identity(m.rows(), k);
  out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return out;
}

// Left-orthonormalize site i and push the remainder into site i+1.
void left_step(Mps& m, int i) {
  auto& t = m.tensors;
  Qr qr = thin_qr(stack_rows(t[static_cast<size_t>(i)]));
  t[static_cast<size_t>(i)] = unstack_rows(qr.q);
  for (auto& a : t[static_cast<size_t>(i + 1)]) a = qr.r * a;
}

// Right-orthonormalize site i and push the remainder into site i-1.
void right_step(Mps& m, int i) {
  auto& t = m.tensors;
  Qr qr = thin_qr(stack_cols(t[static_cast<size_t>(i)]).adjoint());
  t[static_cast<size_t>(i)] = unstack_cols(qr.q.adjoint());
  MatC rd = qr.r.adjoint();
  for (auto& a : t[static_cast<size_t>(i - 1)]) a = a * rd;
}

void normalize_site(Mps& m, int i) {
  auto& s = m.tensors[static_cast<size_t>(i)];
  double n = std::sqrt(s[0].squaredNorm() + s[1].squaredNorm());
  if (!(n > 0.0) || !std::isfinite(n)) throw std::runtime_error("mps: zero or non-finite state");
  s[0] /= n;
  s[1] /= n;
  m.norm_log += std::log(n);
}

// Vidal to right-canonical plain tensors B_i = Gamma_i Lambda_i.
Mps plain(const Mps& in) {
  if (in.gauge.kind != GaugeKind::Vidal) return in;
  Mps out;
  out.norm_log = in.norm_log;
  out.gauge = Gauge::right();
  out.tensors = in.tensors;
  for (int i = 0; i + 1 < in.size(); ++i) {
    const VecR& l = in.singular_values[static_cast<size_t>(i)];
    for (auto& a : out.tensors[static_cast<size_t>(i)]) a = a * l.cast<cplx>().asDiagonal();
  }
  return out;
}

Mps to_right(const Mps& in) {
  Mps m = plain(in);
  for (int i = m.size() - 1; i >= 1; --i) right_step(m, i);
  normalize_site(m, 0);
  m.gauge = Gauge::right();
  m.singular_values.clear();
  return m;
}

Mps to_left(const Mps& in) {
  Mps m = plain(in);
  for (int i = 0; i + 1 < m.size(); ++i) left_step(m, i);
  normalize_site(m, m.size() - 1);
  m.gauge = Gauge::left();
  m.singular_values.clear();
  return m;
}

Mps to_mixed(const Mps& in, int c) {
  Mps m = plain(in);
  if (c < 0 || c >= m.size()) throw std::invalid_argument("canonicalize: center out of range");
  for (int i = 0; i < c; ++i) left_step(m, i);
  for (int i = m.size() - 1; i > c; --i) right_step(m, i);
  normalize_site(m, c);
  m.gauge = Gauge::mixed(c);
  m.singular_values.clear();
  return m;
}

// Exact conversion; Schmidt values below kVidalZero * max are dropped.
Mps to_vidal(const Mps& in) {
  Mps r = to_right(in);
  const int n = r.size();
  Mps out;
  out.gauge = Gauge::vidal();
  out.norm_log = r.norm_log;
  out.tensors.resize(static_cast<size_t>(n));
  out.singular_values.resize(static_cast<size_t>(std::max(n - 1, 0)));
  Site c = r.tensors[0];
  VecR lam_left = VecR::Ones(1);
  for (int i = 0; i + 1 < n; ++i) {
    Svd d = svd(stack_rows(c));
    int keep = truncation_rank(d.S, kUnbounded, kVidalZero);
    VecR s = d.S.head(keep);
    double ns = s.norm();
    out.norm_log += std::log(ns);
    s /= ns;
    Site a = unstack_rows(d.U.leftCols(keep));
    VecR inv = lam_left.cwiseInverse();
    for (auto& x : a) x = inv.cast<cplx>().asDiagonal() * x;
    out.tensors[static_cast<size_t>(i)] = a;
    out.singular_values[static_cast<size_t>(i)] = s;
    MatC carry = s.cast<cplx>().asDiagonal() * d.V.leftCols(keep).adjoint();
    const Site& b = r.tensors[static_cast<size_t>(i + 1)];
    c = {carry * b[0], carry * b[1]};
    lam_left = s;
  }
  // Last site: c = Lambda_{n-2} Gamma_{n-1}.
  double nc = std::sqrt(c[0].squaredNorm() + c[1].squaredNorm());
  out.norm_log += std::log(nc);
  VecR inv = lam_left.cwiseInverse();
  for (auto& x : c) x = inv.cast<cplx>().asDiagonal() * (x / nc);
  out.tensors[static_cast<size_t>(n - 1)] = c;
  return out;
}

double vn_entropy_of_density(const MatC& rho) {
  Eigen::SelfAdjointEigenSolver<MatC> es(rho, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    double p = es.eigenvalues()(k);
    if (p > 1e-300) s -= p * std::log(p);
  }
  return s;
}

}  // namespace

std::string gauge_name(const Gauge& g) {
  switch (g.kind) {
    case GaugeKind::None: return "none";
    case GaugeKind::Left: return "left";
    case GaugeKind::Right: return "right";
    case GaugeKind::Mixed: return "mixed(" + std::to_string(g.center) + ")";
    case GaugeKind::Vidal: return "vidal";
  }
  return "unknown";
}

int Mps::max_bond() const {
  int m = 1;
  for (int b = 0; b + 1 < size(); ++b) m = std::max(m, bond_dim(b));
  return m;
}

void Mps::validate() const {
  if (tensors.empty()) throw std::invalid_argument("mps: empty");
  for (int i = 0; i < size(); ++i) {
    const Site& s = tensors[static_cast<size_t>(i)];
    if (s[0].rows() != s[1].rows() || s[0].cols() != s[1].cols())
      throw std::invalid_argument("mps: physical slices differ in shape at site " + std::to_string(i));
    if (i == 0 && s[0].rows() != 1) throw std::invalid_argument("mps: left boundary bond must be 1");
    if (i == size() - 1 && s[0].cols() != 1)
      throw std::invalid_argument("mps: right boundary bond must be 1");
    if (i + 1 < size() && s[0].cols() != tensors[static_cast<size_t>(i + 1)][0].rows())
      throw std::invalid_argument("mps: bond mismatch after site " + std::to_string(i));
  }
  if (gauge.kind == GaugeKind::Vidal) {
    if (static_cast<int>(singular_values.size()) != size() - 1)
      throw std::invalid_argument("mps: vidal gauge needs N-1 singular value vectors");
    for (int b = 0; b + 1 < size(); ++b)
      if (singular_values[static_cast<size_t>(b)].size() != bond_dim(b))
        throw std::invalid_argument("mps: singular values do not match bond " + std::to_string(b));
  }
  if (gauge.kind == GaugeKind::Mixed && (gauge.center < 0 || gauge.center >= size()))
    throw std::invalid_argument("mps: mixed center out of range");
}

Mps product_state(const std::vector<VecC>& local) {
  if (local.empty()) throw std::invalid_argument("product_state: empty");
  Mps m;
  for (const auto& v : local) {
    if (v.size() != 2) throw std::invalid_argument("product_state: local states must have size 2");
    Site s{MatC::Constant(1, 1, v(0)), MatC::Constant(1, 1, v(1))};
    m.tensors.push_back(s);
  }
  m.gauge = Gauge::none();
  return m;
}

Mps zero_state(int n) {
  VecC z(2);
  z << 1.0, 0.0;
  Mps m = product_state(std::vector<VecC>(static_cast<size_t>(n), z));
  m.gauge = Gauge::mixed(0);
  return m;
}

Mps ghz_state(int n) {
  if (n < 2) throw std::invalid_argument("ghz_state: need n >= 2");
  Mps m;
  m.tensors.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    int l = i == 0 ? 1 : 2, r = i == n - 1 ? 1 : 2;
    Site s{MatC::Zero(l, r), MatC::Zero(l, r)};
    s[0](0, 0) = 1.0;
    s[1](l - 1, r - 1) = 1.0;
    m.tensors[static_cast<size_t>(i)] = s;
  }
  m.tensors[0][0] /= std::sqrt(2.0);
  m.tensors[0][1] /= std::sqrt(2.0);
  m.gauge = Gauge::none();
  return canonicalize(m, Gauge::right());
}

Mps random_mps(int n, int chi, Rng& rng) {
  if (n < 1 || chi < 1) throw std::invalid_argument("random_mps: bad sizes");
  std::vector<int> bonds(static_cast<size_t>(n + 1), 1);
  for (int b = 1; b < n; ++b) {
    double cap = std::min(std::pow(2.0, b), std::pow(2.0, n - b));
    bonds[static_cast<size_t>(b)] = static_cast<int>(std::min<double>(chi, cap));
  }
  Mps m;
  for (int i = 0; i < n; ++i) {
    int l = bonds[static_cast<size_t>(i)], r = bonds[static_cast<size_t>(i + 1)];
    m.tensors.push_back({random_complex(l, r, rng), random_complex(l, r, rng)});
  }
  m.gauge = Gauge::none();
  Mps out = canonicalize(m, Gauge::right());
  out.norm_log = 0.0;
  return out;
}

Mps canonicalize(const Mps& mps, Gauge target) {
  mps.validate();
  switch (target.kind) {
    case GaugeKind::Left: return to_left(mps);
    case GaugeKind::Right: return to_right(mps);
    case GaugeKind::Mixed: return to_mixed(mps, target.center);
    case GaugeKind::Vidal: return to_vidal(mps);
    case GaugeKind::None: {
      Mps m = plain(mps);
      m.gauge = Gauge::none();
      m.singular_values.clear();
      return m;
    }
  }
  return mps;
}

double left_orthonormality_error(const Site& a) {
  MatC g = a[0].adjoint() * a[0] + a[1].adjoint() * a[1];
  return (g - MatC::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

double right_orthonormality_error(const Site& a) {
  MatC g = a[0] * a[0].adjoint() + a[1] * a[1].adjoint();
  return (g - MatC::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

double gauge_error(const Mps& m) {
  const int n = m.size();
  double err = 0.0;
  auto norm_err = [&](int i) {
    const Site& s = m.tensors[static_cast<size_t>(i)];
    return std::abs(std::sqrt(s[0].squaredNorm() + s[1].squaredNorm()) - 1.0);
  };
  switch (m.gauge.kind) {
    case GaugeKind::None: return 0.0;
    case GaugeKind::Left:
      for (int i = 0; i + 1 < n; ++i) err = std::max(err, left_orthonormality_error(m.tensors[static_cast<size_t>(i)]));
      return std::max(err, norm_err(n - 1));
    case GaugeKind::Right:
      for (int i = 1; i < n; ++i) err = std::max(err, right_orthonormality_error(m.tensors[static_cast<size_t>(i)]));
      return std::max(err, norm_err(0));
    case GaugeKind::Mixed:
      for (int i = 0; i < m.gauge.center; ++i)
        err = std::max(err, left_orthonormality_error(m.tensors[static_cast<size_t>(i)]));
      for (int i = m.gauge.center + 1; i < n; ++i)
        err = std::max(err, right_orthonormality_error(m.tensors[static_cast<size_t>(i)]));
      return std::max(err, norm_err(m.gauge.center));
    case GaugeKind::Vidal:
      for (int i = 0; i < n; ++i) {
        Site a = m.tensors[static_cast<size_t>(i)];
        Site b = a;
        if (i > 0) {
          const VecR& l = m.singular_values[static_cast<size_t>(i - 1)];
          for (auto& x : a) x = l.cast<cplx>().asDiagonal() * x;
        }
        if (i + 1 < n) {
          const VecR& l = m.singular_values[static_cast<size_t>(i)];
          for (auto& x : b) x = x * l.cast<cplx>().asDiagonal();
        }
        err = std::max(err, left_orthonormality_error(a));
        err = std::max(err, right_orthonormality_error(b));
      }
      for (const auto& l : m.singular_values) err = std::max(err, std::abs(l.squaredNorm() - 1.0));
      return err;
  }
  return err;
}

void move_center(Mps& m, int target) {
  if (m.gauge.kind != GaugeKind::Mixed) throw std::logic_error("move_center: mps is not in mixed gauge");
  if (target < 0 || target >= m.size()) throw std::invalid_argument("move_center: out of range");
  int c = m.gauge.center;
  while (c < target) {
    left_step(m, c);
    ++c;
  }
  while (c > target) {
    right_step(m, c);
    --c;
  }
  m.gauge.center = c;
}

MpsResult truncate(const Mps& mps, int chi_max, double eps) {
  if (chi_max < 1) throw std::invalid_argument("truncate: chi_max must be >= 1");
  const Gauge want = mps.gauge.kind == GaugeKind::None ? Gauge::left() : mps.gauge;
  Mps m = to_right(mps);
  const int n = m.size();
  double discarded = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    Svd d = svd(stack_rows(m.tensors[static_cast<size_t>(i)]));
    int keep = truncation_rank(d.S, chi_max, eps);
    double total = d.S.squaredNorm();
    discarded += discarded_weight(d.S, keep) / total;
    VecR s = d.S.head(keep);
    double ns = s.norm();
    m.norm_log += std::log(ns);
    s /= ns;
    m.tensors[static_cast<size_t>(i)] = unstack_rows(d.U.leftCols(keep));
    MatC carry = s.cast<cplx>().asDiagonal() * d.V.leftCols(keep).adjoint();
    for (auto& a : m.tensors[static_cast<size_t>(i + 1)]) a = carry * a;
  }
  normalize_site(m, n - 1);
  m.gauge = Gauge::left();
  MpsResult out;
  out.discarded_weight = discarded;
  out.mps = want == Gauge::left() ? m : canonicalize(m, want);
  return out;
}

std::vector<VecR> schmidt_values(const Mps& mps) {
  if (mps.gauge.kind == GaugeKind::Vidal) return mps.singular_values;
  Mps m = to_right(mps);
  const int n = m.size();
  std::vector<VecR> out;
  for (int i = 0; i + 1 < n; ++i) {
    Svd d = svd(stack_rows(m.tensors[static_cast<size_t>(i)]));
    int keep = truncation_rank(d.S, kUnbounded, 0.0);
    VecR s = d.S.head(keep);
    s /= s.norm();
    out.push_back(s);
    m.tensors[static_cast<size_t>(i)] = unstack_rows(d.U.leftCols(keep));
    MatC carry = s.cast<cplx>().asDiagonal() * d.V.leftCols(keep).adjoint();
    for (auto& a : m.tensors[static_cast<size_t>(i + 1)]) a = carry * a;
  }
  return out;
}

Entropy Entropy::renyi(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("renyi entropy: alpha must be positive");
  if (alpha == 1.0) throw std::invalid_argument("renyi entropy: alpha = 1 is the von Neumann case");
  return {Kind::Renyi, alpha};
}

double spectrum_entropy(const VecR& lam, Entropy e) {
  double tot = lam.squaredNorm();
  if (!(tot > 0.0)) return 0.0;
  if (e.kind == Entropy::Kind::VonNeumann) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
      double p = lam(k) * lam(k) / tot;
      if (p > 1e-300) s -= p * std::log(p);
    }
    return s;
  }
  if (e.alpha == 1.0) throw std::invalid_argument("renyi entropy: alpha = 1 is the von Neumann case");
  if (std::isinf(e.alpha)) return -std::log(lam.maxCoeff() * lam.maxCoeff() / tot);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < lam.size(); ++k) acc += std::pow(lam(k) * lam(k) / tot, e.alpha);
  return std::log(acc) / (1.0 - e.alpha);
}

VecR bond_entropy_profile(const Mps& mps, Entropy e) {
  auto sv = schmidt_values(mps);
  VecR out(static_cast<Eigen::Index>(sv.size()));
  for (size_t b = 0; b < sv.size(); ++b) out(static_cast<Eigen::Index>(b)) = spectrum_entropy(sv[b], e);
  return out;
}

QmiMatrix qmi_matrix(const Mps& mps) {
  const int n = mps.size();
  if (n < 2) throw std::invalid_argument("qmi_matrix: need N >= 2");
  Mps m = to_right(mps);
  std::vector<double> s1(static_cast<size_t>(n));
  MatR s2 = MatR::Zero(n, n);
  Site center = m.tensors[0];
  for (int i = 0; i < n; ++i) {
    const Site& c = center;
    MatC rho1(2, 2);
    for (int s = 0; s < 2; ++s)
      for (int sp = 0; sp < 2; ++sp)
        rho1(s, sp) = (c[static_cast<size_t>(s)] * c[static_cast<size_t>(sp)].adjoint()).trace();
    s1[static_cast<size_t>(i)] = vn_entropy_of_density(rho1);
    // W[s][s'] = C^{s'}^dagger C^{s}
    std::array<std::array<MatC, 2>, 2> w;
    for (int s = 0; s < 2; ++s)
      for (int sp = 0; sp < 2; ++sp)
        w[static_cast<size_t>(s)][static_cast<size_t>(sp)] =
            c[static_cast<size_t>(sp)].adjoint() * c[static_cast<size_t>(s)];
    for (int j = i + 1; j < n; ++j) {
      const Site& b = m.tensors[static_cast<size_t>(j)];
      MatC rho2(4, 4);
      for (int s = 0; s < 2; ++s)
        for (int sp = 0; sp < 2; ++sp)
          for (int t = 0; t < 2; ++t)
            for (int tp = 0; tp < 2; ++tp)
              rho2(2 * s + t, 2 * sp + tp) =
                  (b[static_cast<size_t>(tp)].adjoint() * w[static_cast<size_t>(s)][static_cast<size_t>(sp)] *
                   b[static_cast<size_t>(t)])
                      .trace();
      s2(i, j) = s2(j, i) = vn_entropy_of_density(rho2);
      if (j + 1 < n) {
        for (auto& row : w)
          for (auto& x : row) x = b[0].adjoint() * x * b[0] + b[1].adjoint() * x * b[1];
      }
    }
    if (i + 1 < n) {
      Qr qr = thin_qr(stack_rows(center));
      const Site& nb = m.tensors[static_cast<size_t>(i + 1)];
      center = {qr.r * nb[0], qr.r * nb[1]};
    }
  }
  QmiMatrix q;
  q.values = MatR::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      q.values(i, j) = q.values(j, i) = s1[static_cast<size_t>(i)] + s1[static_cast<size_t>(j)] - s2(i, j);
  return q;
}

cplx overlap(const Mps& a_in, const Mps& b_in) {
  if (a_in.size() != b_in.size()) throw std::invalid_argument("overlap: mismatched N");
  Mps a = plain(a_in), b = plain(b_in);
  MatC e = MatC::Ones(1, 1);
  for (int i = 0; i < a.size(); ++i) {
    const Site& x = a.tensors[static_cast<size_t>(i)];
    const Site& y = b.tensors[static_cast<size_t>(i)];
    e = x[0].adjoint() * e * y[0] + x[1].adjoint() * e * y[1];
  }
  return e(0, 0) * std::exp(a.norm_log + b.norm_log);
}

double norm_squared(const Mps& m) { return std::real(overlap(m, m)); }

double fidelity(const Mps& a, const Mps& b) {
  Mps an = a, bn = b;
  an.norm_log = 0.0;
  bn.norm_log = 0.0;
  double na = norm_squared(an), nb = norm_squared(bn);
  return std::norm(overlap(an, bn)) / (na * nb);
}

double negative_log_fidelity_per_site(const Mps& target, const Mps& prepared) {
  double ov = std::abs(overlap(target, prepared));
  if (!(ov > 0.0)) return std::numeric_limits<double>::infinity();
  return -std::log(ov) / target.size();
}

void apply_single_site_gate_inplace(Mps& m, const MatC& g, int site) {
  if (g.rows() != 2 || g.cols() != 2) throw std::invalid_argument("single-site gate must be 2x2");
  if (site < 0 || site >= m.size()) throw std::invalid_argument("single-site gate: site out of range");
  Site& s = m.tensors[static_cast<size_t>(site)];
  Site out{g(0, 0) * s[0] + g(0, 1) * s[1], g(1, 0) * s[0] + g(1, 1) * s[1]};
  s = out;
}

namespace {

// theta blocks T[s][t] (chi_l x chi_r) -> gate -> (2 chi_l x 2 chi_r) matrix.
MatC gated_theta(const std::array<std::array<MatC, 2>, 2>& th, const MatC& g) {
  Eigen::Index l = th[0][0].rows(), r = th[0][0].cols();
  MatC out = MatC::Zero(2 * l, 2 * r);
  for (int sp = 0; sp < 2; ++sp)
    for (int tp = 0; tp < 2; ++tp) {
      auto blk = out.block(sp * l, tp * r, l, r);
      for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t) {
          cplx c = g(2 * sp + tp, 2 * s + t);
          if (c != cplx(0.0, 0.0)) blk += c * th[static_cast<size_t>(s)][static_cast<size_t>(t)];
        }
    }
  return out;
}

double apply_vidal(Mps& m, const MatC& g, int i, int chi_max, double eps) {
  const int n = m.size();
  Site& gl = m.tensors[static_cast<size_t>(i)];
  Site& gr = m.tensors[static_cast<size_t>(i + 1)];
  VecR ll = i > 0 ? m.singular_values[static_cast<size_t>(i - 1)] : VecR::Ones(1);
  VecR lr = i + 2 < n ? m.singular_values[static_cast<size_t>(i + 1)] : VecR::Ones(1);
  const VecR& lc = m.singular_values[static_cast<size_t>(i)];
  std::array<std::array<MatC, 2>, 2> th;
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 2; ++t)
      th[static_cast<size_t>(s)][static_cast<size_t>(t)] = ll.cast<cplx>().asDiagonal() * gl[static_cast<size_t>(s)] *
                                                           lc.cast<cplx>().asDiagonal() * gr[static_cast<size_t>(t)] *
                                                           lr.cast<cplx>().asDiagonal();
  MatC theta = gated_theta(th, g);
  Svd d = svd(theta);
  int keep = truncation_rank(d.S, chi_max, std::max(eps, kVidalZero));
  double total = d.S.squaredNorm();
  double disc = discarded_weight(d.S, keep) / total;
  VecR s = d.S.head(keep);
  double ns = s.norm();
  m.norm_log += std::log(ns);
  s /= ns;
  // Pseudo-inverse: entries below kVidalZero * max are treated as zero.
  auto pinv = [](const VecR& v) {
    VecR out(v.size());
    double mx = v.size() ? v.maxCoeff() : 0.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) out(k) = v(k) > kVidalZero * mx ? 1.0 / v(k) : 0.0;
    return out;
  };
  VecR il = pinv(ll), ir = pinv(lr);
  Eigen::Index cl = ll.size(), cr = lr.size();
  MatC u = d.U.leftCols(keep), vh = d.V.leftCols(keep).adjoint();
  gl = {il.cast<cplx>().asDiagonal() * u.topRows(cl), il.cast<cplx>().asDiagonal() * u.bottomRows(cl)};
  gr = {vh.leftCols(cr) * ir.cast<cplx>().asDiagonal(), vh.rightCols(cr) * ir.cast<cplx>().asDiagonal()};
  m.singular_values[static_cast<size_t>(i)] = s;
  return disc;
}

double apply_split(Mps& m, const MatC& g, int i, int chi_max, double eps, bool center_right) {
  Site& a = m.tensors[static_cast<size_t>(i)];
  Site& b = m.tensors[static_cast<size_t>(i + 1)];
  std::array<std::array<MatC, 2>, 2> th;
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 2; ++t)
      th[static_cast<size_t>(s)][static_cast<size_t>(t)] = a[static_cast<size_t>(s)] * b[static_cast<size_t>(t)];
  MatC theta = gated_theta(th, g);
  Svd d = svd(theta);
  int keep = truncation_rank(d.S, chi_max, eps);
  double total = d.S.squaredNorm();
  if (!(total > 0.0)) throw std::runtime_error("apply_two_site_gate: zero state");
  double disc = discarded_weight(d.S, keep) / total;
  VecR s = d.S.head(keep);
  bool canonical = m.gauge.kind == GaugeKind::Mixed;
  if (canonical) {
    double ns = s.norm();
    m.norm_log += std::log(ns);
    s /= ns;
  }
  Eigen::Index cl = a[0].rows(), cr = b[0].cols();
  MatC u = d.U.leftCols(keep), vh = d.V.leftCols(keep).adjoint();
  if (center_right) {
    vh = s.cast<cplx>().asDiagonal() * vh;
  } else {
    u = u * s.cast<cplx>().asDiagonal();
  }
  a = {u.topRows(cl), u.bottomRows(cl)};
  b = {vh.leftCols(cr), vh.rightCols(cr)};
  return disc;
}

}  // namespace

double apply_two_site_gate_inplace(Mps& m, const MatC& gate, int i, int chi_max, double eps) {
  if (i < 0 || i + 1 >= m.size()) throw std::invalid_argument("apply_two_site_gate: site out of range");
  if (gate.rows() != 4 || gate.cols() != 4) throw std::invalid_argument("apply_two_site_gate: gate must be 4x4");
  if (!is_unitary(gate, 1e-10)) throw std::invalid_argument("apply_two_site_gate: gate is not unitary");
  switch (m.gauge.kind) {
    case GaugeKind::Vidal: return apply_vidal(m, gate, i, chi_max, eps);
    case GaugeKind::Mixed: {
      bool from_right = m.gauge.center > i;
      move_center(m, from_right ? i + 1 : i);
      double d = apply_split(m, gate, i, chi_max, eps, !from_right);
      m.gauge.center = from_right ? i : i + 1;
      return d;
    }
    case GaugeKind::None: return apply_split(m, gate, i, chi_max, eps, true);
    case GaugeKind::Left:
    case GaugeKind::Right: {
      Gauge keep = m.gauge;
      m = to_mixed(m, i);
      double d = apply_split(m, gate, i, chi_max, eps, true);
      m.gauge.center = i + 1;
      m = canonicalize(m, keep);
      return d;
    }
  }
  return 0.0;
}

MpsResult apply_two_site_gate(const Mps& mps, const MatC& gate, int site, int chi_max, double eps) {
  MpsResult r;
  r.mps = mps;
  r.discarded_weight = apply_two_site_gate_inplace(r.mps, gate, site, chi_max, eps);
  return r;
}

VecC to_dense(const Mps& mps_in) {
  if (mps_in.size() > kMaxDenseQubits) throw std::invalid_argument("to_dense: too many qubits");
  Mps m = plain(mps_in);
  MatC state = MatC::Ones(1, 1);
  for (int i = 0; i < m.size(); ++i) {
    const Site& s = m.tensors[static_cast<size_t>(i)];
    MatC next(state.rows() * 2, s[0].cols());
    for (Eigen::Index p = 0; p < state.rows(); ++p) {
      next.row(2 * p) = state.row(p) * s[0];
      next.row(2 * p + 1) = state.row(p) * s[1];
    }
    state.swap(next);
  }
  return state.col(0) * std::exp(m.norm_log);
}

}  // namespace mpsprep
