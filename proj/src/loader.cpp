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

#include "mpsprep/loader.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace mpsprep {

double quantics_index_to_point(const std::vector<int>& bits) {
  double x = 0.0, w = 0.5;
  for (int b : bits) {
    if (b != 0 && b != 1) throw std::invalid_argument("quantics index: bits must be 0 or 1");
    x += b * w;
    w *= 0.5;
  }
  return x;
}

double quantics_index_to_point(std::uint64_t index, int n_bits) {
  return std::ldexp(static_cast<double>(index), -n_bits);
}

VecC QuanticsGrid::dense() const {
  if (n_bits > kMaxDenseQubits) throw std::invalid_argument("QuanticsGrid::dense: too many bits");
  const std::uint64_t n = std::uint64_t{1} << n_bits;
  VecC v(static_cast<Eigen::Index>(n));
  for (std::uint64_t k = 0; k < n; ++k) v(static_cast<Eigen::Index>(k)) = at(k);
  return v;
}

QuanticsGrid gaussian_amplitudes(int n_bits, double mu, double sigma, double ell) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_amplitudes: sigma must be positive");
  QuanticsGrid g;
  g.n_bits = n_bits;
  g.interval_length = ell;
  g.f = [mu, sigma, ell](double xt) {
    double x = xt * ell;
    double d = (x - mu) / sigma;
    double f = std::exp(-0.5 * d * d) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    return cplx(std::sqrt(f), 0.0);
  };
  return g;
}

double levy_density(double x, double c) {
  if (!(x > 0.0)) return 0.0;
  return std::sqrt(c / (2.0 * std::numbers::pi)) * std::exp(-c / (2.0 * x)) / std::pow(x, 1.5);
}

QuanticsGrid levy_amplitudes(int n_bits, double c, double ell) {
  if (!(c > 0.0)) throw std::invalid_argument("levy_amplitudes: c must be positive");
  QuanticsGrid g;
  g.n_bits = n_bits;
  g.interval_length = ell;
  g.f = [c, ell](double xt) { return cplx(std::sqrt(levy_density(xt * ell, c)), 0.0); };
  return g;
}

MpsResult dense_to_mps(const VecC& amp, double eps, int chi_max) {
  const Eigen::Index len = amp.size();
  if (len < 2 || (len & (len - 1)) != 0) throw std::invalid_argument("dense_to_mps: length must be 2^N, N >= 1");
  int n = 0;
  while ((Eigen::Index{1} << n) < len) ++n;
  if (n > kMaxDenseQubits) throw std::invalid_argument("dense_to_mps: more than 24 qubits");
  double nrm = amp.norm();
  if (!(nrm > 0.0)) throw std::invalid_argument("dense_to_mps: all-zero input");
  MpsResult out;
  Mps& m = out.mps;
  m.tensors.resize(static_cast<size_t>(n));
  MatC c = (amp / nrm).transpose();  // 1 x 2^N
  for (int i = 0; i + 1 < n; ++i) {
    const Eigen::Index chi = c.rows(), half = c.cols() / 2;
    MatC mx(2 * chi, half);
    mx.topRows(chi) = c.leftCols(half);
    mx.bottomRows(chi) = c.rightCols(half);
    Svd d = svd(mx);
    int keep = truncation_rank(d.S, chi_max, eps);
    out.discarded_weight += discarded_weight(d.S, keep) / d.S.squaredNorm();
    VecR s = d.S.head(keep);
    s /= s.norm();
    MatC u = d.U.leftCols(keep);
    m.tensors[static_cast<size_t>(i)] = {u.topRows(chi), u.bottomRows(chi)};
    c = s.cast<cplx>().asDiagonal() * d.V.leftCols(keep).adjoint();
  }
  m.tensors[static_cast<size_t>(n - 1)] = {c.col(0), c.col(1)};
  m.gauge = Gauge::left();
  return out;
}

cplx mps_amplitude(const Mps& mps, const std::vector<int>& bits) {
  if (static_cast<int>(bits.size()) != mps.size()) throw std::invalid_argument("mps_amplitude: wrong length");
  Mps m = mps.gauge.kind == GaugeKind::Vidal ? canonicalize(mps, Gauge::right()) : mps;
  MatC row = MatC::Ones(1, 1);
  for (int i = 0; i < m.size(); ++i) row = row * m.tensors[static_cast<size_t>(i)][static_cast<size_t>(bits[static_cast<size_t>(i)])];
  return row(0, 0) * std::exp(m.norm_log);
}

LorenzParams LorenzParams::full_scale() {
  LorenzParams p;
  p.t_final = 128.0;
  p.dt = std::ldexp(1.0, -20);
  return p;
}

VecC lorenz_series(const LorenzParams& p) {
  if (!(p.dt > 0.0) || !(p.t_final > 0.0)) throw std::invalid_argument("lorenz_series: dt and T must be positive");
  const auto steps = static_cast<std::uint64_t>(std::llround(p.t_final / p.dt));
  if (steps < 1) throw std::invalid_argument("lorenz_series: T/dt below one step");
  std::uint64_t axis = 1;
  while (axis < steps) axis <<= 1;
  VecC v = VecC::Zero(static_cast<Eigen::Index>(4 * axis));
  double x = p.x0[0], y = p.x0[1], z = p.x0[2];
  for (std::uint64_t k = 0; k < steps; ++k) {
    auto i = static_cast<Eigen::Index>(k);
    auto a = static_cast<Eigen::Index>(axis);
    v(i) = x;
    v(a + i) = y;
    v(2 * a + i) = z;
    double dx = p.sigma * (y - x);
    double dy = x * (p.rho - z) - y;
    double dz = x * y - p.beta * z;
    x += p.dt * dx;
    y += p.dt * dy;
    z += p.dt * dz;
  }
  double n = v.norm();
  if (!(n > 0.0)) throw std::runtime_error("lorenz_series: zero trajectory");
  return v / n;
}

VecC stack_series(const std::vector<std::vector<double>>& series, int k, int m) {
  if (k < 0 || m < 0 || k + m > kMaxDenseQubits) throw std::invalid_argument("stack_series: bad k or m");
  const size_t len = size_t{1} << k, max_series = size_t{1} << m;
  std::vector<const std::vector<double>*> use;
  for (const auto& s : series) {
    if (s.size() >= len) use.push_back(&s);
    if (use.size() == max_series) break;
  }
  if (use.empty()) throw std::invalid_argument("stack_series: fewer than one complete series");
  const size_t data = use.size() * len;
  double mean = 0.0;
  for (const auto* s : use)
    for (size_t t = 0; t < len; ++t) mean += (*s)[t];
  mean /= static_cast<double>(data);
  VecC v = VecC::Zero(static_cast<Eigen::Index>(len * max_series));
  double scale = 0.0;
  for (size_t j = 0; j < use.size(); ++j)
    for (size_t t = 0; t < len; ++t) {
      double x = (*use[j])[t];
      scale = std::max(scale, std::abs(x));
      v(static_cast<Eigen::Index>(j * len + t)) = x - mean;
    }
  double n = v.norm();
  if (!(n > 1e-14 * std::max(scale, 1e-300) * std::sqrt(static_cast<double>(data))))
    throw std::invalid_argument("stack_series: degenerate after centering");
  return v / n;
}

namespace {

std::string trim(std::string s) {
  auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
  size_t i = 0;
  while (i < s.size() && issp(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e;
}

}  // namespace

std::vector<std::vector<double>> read_series_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_series_csv: cannot open " + path);
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(trim(cell));
    double t = 0, v = 0;
    bool ok = f.size() == 3 && parse_double(f[1], t) && parse_double(f[2], v);
    if (!ok) {
      if (lineno == 1 && f.size() == 3) continue;  // header
      throw std::runtime_error("read_series_csv: malformed row at line " + std::to_string(lineno));
    }
    if (!rows.count(f[0])) order.push_back(f[0]);
    rows[f[0]].emplace_back(t, v);
  }
  std::vector<std::vector<double>> out;
  for (const auto& id : order) {
    auto r = rows[id];
    std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<double> vals;
    for (const auto& p : r) vals.push_back(p.second);
    out.push_back(std::move(vals));
  }
  return out;
}

VecC csv_stacked_amplitudes(const std::string& path, int k, int m) {
  return stack_series(read_series_csv(path), k, m);
}

SyntheticCorpus synthetic_company_corpus(int k, int m, Rng& rng) {
  if (k < 1 || m < 2) throw std::invalid_argument("synthetic_company_corpus: need k >= 1, m >= 2");
  SyntheticCorpus c;
  std::vector<int> bits(static_cast<size_t>(m));
  for (int b = 0; b < m; ++b) bits[static_cast<size_t>(b)] = b;
  std::shuffle(bits.begin(), bits.end(), rng);
  c.pair_of.assign(static_cast<size_t>(m), -1);
  std::uniform_real_distribution<double> weak(0.05, 0.35), phase(0.0, 2.0 * std::numbers::pi);
  std::vector<std::array<double, 2>> w;
  std::vector<std::pair<int, int>> pairs;
  for (int p = 0; p + 1 < m; p += 2) {
    int a = bits[static_cast<size_t>(p)], b = bits[static_cast<size_t>(p + 1)];
    c.pair_of[static_cast<size_t>(a)] = b;
    c.pair_of[static_cast<size_t>(b)] = a;
    pairs.emplace_back(a, b);
    w.push_back({1.0, weak(rng)});
  }
  const size_t len = size_t{1} << k;
  const double ph = phase(rng);
  for (size_t co = 0; co < (size_t{1} << m); ++co) {
    double h = 1.0;
    for (size_t p = 0; p < pairs.size(); ++p) {
      // Bit 0 of the company index is its most significant bit.
      int ba = static_cast<int>((co >> (m - 1 - pairs[p].first)) & 1u);
      int bb = static_cast<int>((co >> (m - 1 - pairs[p].second)) & 1u);
      h *= w[p][static_cast<size_t>(ba ^ bb)];
    }
    std::vector<double> s(len);
    for (size_t t = 0; t < len; ++t)
      s[t] = h * (2.0 + std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(len) + ph));
    c.series.push_back(std::move(s));
  }
  return c;
}

VecC ising_apply(int n, double h, const VecC& v) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  VecC out = VecC::Zero(dim);
  for (Eigen::Index x = 0; x < dim; ++x) {
    double diag = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      int a = static_cast<int>((x >> (n - 1 - i)) & 1), b = static_cast<int>((x >> (n - 2 - i)) & 1);
      diag += (a == b) ? 0.25 : -0.25;
    }
    out(x) += diag * v(x);
    for (int i = 0; i < n; ++i) out(x ^ (Eigen::Index{1} << (n - 1 - i))) -= 0.5 * h * v(x);
  }
  return out;
}

namespace {

VecR ising_apply_real(int n, double h, const VecR& v) {
  return ising_apply(n, h, v.cast<cplx>()).real();
}

IsingGround lanczos_ground(int n, double h) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  const int kmax = 400;
  Rng rng(12345);
  std::normal_distribution<double> nd;
  VecR q(dim);
  for (Eigen::Index i = 0; i < dim; ++i) q(i) = nd(rng);
  q.normalize();
  std::vector<VecR> basis{q};
  std::vector<double> alpha, beta;
  IsingGround best;
  for (int k = 0; k < kmax; ++k) {
    VecR w = ising_apply_real(n, h, basis.back());
    alpha.push_back(basis.back().dot(w));
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) w -= b.dot(w) * b;
    double bn = w.norm();
    int m = static_cast<int>(alpha.size());
    bool done = bn < 1e-14 || m == dim;
    if (m % 10 == 0 || done || k + 1 == kmax) {
      MatR t = MatR::Zero(m, m);
      for (int i = 0; i < m; ++i) t(i, i) = alpha[static_cast<size_t>(i)];
      for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[static_cast<size_t>(i)];
      Eigen::SelfAdjointEigenSolver<MatR> es(t);
      double resid = bn * std::abs(es.eigenvectors()(m - 1, 0));
      if (resid < 1e-12 || done || k + 1 == kmax) {
        VecR g = VecR::Zero(dim);
        for (int i = 0; i < m; ++i) g += es.eigenvectors()(i, 0) * basis[static_cast<size_t>(i)];
        g.normalize();
        best.vector = g.cast<cplx>();
        best.energy = g.dot(ising_apply_real(n, h, g));
        return best;
      }
    }
    beta.push_back(bn);
    basis.push_back(w / bn);
  }
  return best;
}

}  // namespace

IsingGround ising_ground_dense(int n, double h) {
  if (n < 2 || n > 14) throw std::invalid_argument("ising_ground_dense: N must be in [2, 14]");
  if (n > 10) return lanczos_ground(n, h);
  const Eigen::Index dim = Eigen::Index{1} << n;
  MatR hm(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    VecC e = VecC::Zero(dim);
    e(j) = 1.0;
    hm.col(j) = ising_apply(n, h, e).real();
  }
  Eigen::SelfAdjointEigenSolver<MatR> es(hm);
  IsingGround g;
  g.energy = es.eigenvalues()(0);
  g.vector = es.eigenvectors().col(0).cast<cplx>();
  return g;
}

Mps ising_groundstate_exact(int n, double h) {
  return dense_to_mps(ising_ground_dense(n, h).vector, 1e-12).mps;
}

}  // namespace mpsprep
