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

// Two-site tensor cross interpolation with SVD-based rank selection.
//
// Pivot sets: I[b] holds prefixes over sites 0..b, J[b] suffixes over sites
// b+1..N-1, for bonds b = 0..N-2. The interpolant is
//   F ~ T_0 P_0^-1 T_1 P_1^-1 ... T_{N-1}
// with T_b = f(I[b-1], s_b, J[b]) and P_b = f(I[b], J[b]).

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <Eigen/LU>

#include "mpsprep/loader.hpp"

namespace mpsprep {

namespace {

using Index = std::vector<int>;
using IndexSet = std::vector<Index>;

class Sampler {
 public:
  Sampler(const BitFunction& f, int n) : f_(f), n_(n) {}

  cplx operator()(const Index& bits) {
    std::uint64_t key = 0;
    for (int b : bits) key = (key << 1) | static_cast<std::uint64_t>(b);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    cplx v = f_(bits);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::runtime_error("tci_build: function returned a non-finite value");
    cache_.emplace(key, v);
    fmax_ = std::max(fmax_, std::abs(v));
    return v;
  }

  cplx at(const Index& a, int s, int t, const Index& b) {
    Index x;
    x.reserve(static_cast<size_t>(n_));
    x.insert(x.end(), a.begin(), a.end());
    if (s >= 0) x.push_back(s);
    if (t >= 0) x.push_back(t);
    x.insert(x.end(), b.begin(), b.end());
    return (*this)(x);
  }

  std::uint64_t calls() const { return cache_.size(); }
  double fmax() const { return fmax_; }

 private:
  const BitFunction& f_;
  int n_;
  std::unordered_map<std::uint64_t, cplx> cache_;
  double fmax_ = 0.0;
};

Index concat(const Index& a, int s) {
  Index x = a;
  x.push_back(s);
  return x;
}

Index concat(int s, const Index& b) {
  Index x{s};
  x.insert(x.end(), b.begin(), b.end());
  return x;
}

struct Cross {
  std::vector<int> rows, cols;
  double error = 0.0;  // largest residual left, absolute
};

// Greedy full-pivot cross on an explicit matrix.
Cross full_cross(const MatC& a, int max_rank, double abs_tol) {
  MatC r = a;
  Cross c;
  for (int k = 0; k < max_rank; ++k) {
    Eigen::Index p = 0, q = 0;
    double mx = r.cwiseAbs().maxCoeff(&p, &q);
    if (k > 0 && mx <= abs_tol) break;
    if (!(mx > 0.0)) break;
    c.rows.push_back(static_cast<int>(p));
    c.cols.push_back(static_cast<int>(q));
    MatC col = r.col(q), row = r.row(p);
    r -= col * row / r(p, q);
  }
  c.error = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  return c;
}

// Adaptive cross with rook pivoting; entries are evaluated on demand.
template <class Entry>
Cross rook_cross(Eigen::Index nr, Eigen::Index nc, Entry entry, int max_rank, double abs_tol, int start_col) {
  std::vector<VecC> us, vs;  // residual = A - sum u_k v_k^T
  auto column = [&](Eigen::Index q) {
    VecC v(nr);
    for (Eigen::Index i = 0; i < nr; ++i) v(i) = entry(i, q);
    for (size_t k = 0; k < us.size(); ++k) v -= us[k] * vs[k](q);
    return v;
  };
  auto row = [&](Eigen::Index p) {
    VecC v(nc);
    for (Eigen::Index j = 0; j < nc; ++j) v(j) = entry(p, j);
    for (size_t k = 0; k < us.size(); ++k) v -= vs[k] * us[k](p);
    return v;
  };
  Cross c;
  std::vector<bool> used_col(static_cast<size_t>(nc), false);
  Eigen::Index q = std::clamp<Eigen::Index>(start_col, 0, nc - 1);
  for (int k = 0; k < max_rank; ++k) {
    VecC col = column(q);
    Eigen::Index p = 0;
    col.cwiseAbs().maxCoeff(&p);
    VecC rw = row(p);
    for (int it = 0; it < 8; ++it) {
      Eigen::Index q2 = 0;
      rw.cwiseAbs().maxCoeff(&q2);
      if (q2 == q) break;
      q = q2;
      col = column(q);
      Eigen::Index p2 = 0;
      col.cwiseAbs().maxCoeff(&p2);
      if (p2 == p) break;
      p = p2;
      rw = row(p);
    }
    cplx piv = col(p);
    double mag = std::abs(piv);
    c.error = mag;
    if (!(mag > 0.0) || (k > 0 && mag <= abs_tol)) break;
    c.rows.push_back(static_cast<int>(p));
    c.cols.push_back(static_cast<int>(q));
    used_col[static_cast<size_t>(q)] = true;
    us.push_back(col);
    vs.push_back(rw / piv);
    // Next search starts from the unused column with the largest update.
    VecC& last = vs.back();
    double best = -1.0;
    for (Eigen::Index j = 0; j < nc; ++j)
      if (!used_col[static_cast<size_t>(j)] && std::abs(last(j)) > best) {
        best = std::abs(last(j));
        q = j;
      }
    if (best < 0.0) {
      c.error = 0.0;
      break;
    }
  }
  return c;
}

class Tci {
 public:
  Tci(const BitFunction& f, int n, const TciOptions& opt) : s_(f, n), n_(n), opt_(opt) {}

  TciResult run() {
    if (n_ < 2 || n_ > 63) throw std::invalid_argument("tci_build: need 2 <= N <= 63");
    if (!(opt_.tol > 0.0)) throw std::invalid_argument("tci_build: tol must be positive");
    if (opt_.chi_max < 1) throw std::invalid_argument("tci_build: chi_max must be >= 1");
    init_pivots();
    TciResult res;
    res.stats.rook = opt_.force_rook;
    std::uint64_t before = s_.calls();
    for (int sweep = 0; sweep < opt_.max_sweeps; ++sweep) {
      double err = 0.0;
      for (int b = 0; b + 1 < n_; ++b) err = std::max(err, update(b, res.stats));
      for (int b = n_ - 2; b >= 0; --b) err = std::max(err, update(b, res.stats));
      res.stats.sweeps = sweep + 1;
      res.stats.calls_per_sweep.push_back(s_.calls() - before);
      before = s_.calls();
      res.stats.max_error = err;
      bool stable = sweep > 0 && ranks() == last_ranks_;
      last_ranks_ = ranks();
      if (err <= opt_.tol && (stable || sweep + 1 == opt_.max_sweeps || err == 0.0)) break;
    }
    restore_row_nesting();
    res.mps = assemble(res.stats);
    res.stats.ranks = ranks();
    res.stats.pivot_residual = pivot_residual(res.mps);
    res.stats.calls = s_.calls();
    return res;
  }

 private:
  const IndexSet& left_of(int b) const { return b == 0 ? empty_ : I_[static_cast<size_t>(b - 1)]; }
  const IndexSet& right_of(int b) const { return b + 1 >= n_ - 1 ? empty_ : J_[static_cast<size_t>(b + 1)]; }

  std::vector<int> ranks() const {
    std::vector<int> r;
    for (const auto& i : I_) r.push_back(static_cast<int>(i.size()));
    return r;
  }

  void init_pivots() {
    Rng rng(opt_.seed);
    std::bernoulli_distribution coin(0.5);
    Index x(static_cast<size_t>(n_));
    for (auto& b : x) b = coin(rng) ? 1 : 0;
    double cur = std::abs(s_(x));
    for (int pass = 0; pass < n_; ++pass) {
      bool changed = false;
      for (int i = 0; i < n_; ++i) {
        x[static_cast<size_t>(i)] ^= 1;
        double v = std::abs(s_(x));
        if (v > cur) {
          cur = v;
          changed = true;
        } else {
          x[static_cast<size_t>(i)] ^= 1;
        }
      }
      if (!changed) break;
    }
    if (!(cur > 0.0)) throw std::runtime_error("tci_build: greedy start found only zeros");
    I_.assign(static_cast<size_t>(n_ - 1), {});
    J_.assign(static_cast<size_t>(n_ - 1), {});
    for (int b = 0; b + 1 < n_; ++b) {
      I_[static_cast<size_t>(b)] = {Index(x.begin(), x.begin() + b + 1)};
      J_[static_cast<size_t>(b)] = {Index(x.begin() + b + 1, x.end())};
    }
  }

  // Two-site update of bond b; returns the relative local error.
  double update(int b, TciStats& st) {
    const IndexSet& L = left_of(b);
    const IndexSet& R = right_of(b);
    const auto nl = static_cast<Eigen::Index>(L.size()), nr = static_cast<Eigen::Index>(R.size());
    auto entry = [&](Eigen::Index r, Eigen::Index c) {
      return s_.at(L[static_cast<size_t>(r / 2)], static_cast<int>(r % 2), static_cast<int>(c / nr),
                   R[static_cast<size_t>(c % nr)]);
    };
    const bool rook = opt_.force_rook || static_cast<long>(n_) * opt_.chi_max > 4096;
    st.rook = rook;
    Cross cr;
    if (!rook) {
      MatC pi(2 * nl, 2 * nr);
      for (Eigen::Index r = 0; r < pi.rows(); ++r)
        for (Eigen::Index c = 0; c < pi.cols(); ++c) pi(r, c) = entry(r, c);
      Svd d = svd(pi);
      int rank = std::max(1, truncation_rank(d.S, opt_.chi_max, opt_.tol));
      cr = full_cross(pi, rank, opt_.tol * s_.fmax());
    } else {
      cr = rook_cross(2 * nl, 2 * nr, entry, opt_.chi_max, opt_.tol * s_.fmax(), 0);
    }
    IndexSet ni, nj;
    for (size_t k = 0; k < cr.rows.size(); ++k) {
      int r = cr.rows[k], c = cr.cols[k];
      ni.push_back(concat(L[static_cast<size_t>(r / 2)], r % 2));
      nj.push_back(concat(static_cast<int>(c / nr), R[static_cast<size_t>(c % nr)]));
    }
    I_[static_cast<size_t>(b)] = std::move(ni);
    J_[static_cast<size_t>(b)] = std::move(nj);
    return s_.fmax() > 0.0 ? cr.error / s_.fmax() : 0.0;
  }

  // J is nested after a backward half-sweep; rebuild I left to right so that
  // I[b] is drawn from I[b-1] x {0,1} while keeping J fixed.
  void restore_row_nesting() {
    for (int b = 0; b + 1 < n_; ++b) {
      const IndexSet& L = left_of(b);
      const IndexSet& J = J_[static_cast<size_t>(b)];
      MatC m(2 * static_cast<Eigen::Index>(L.size()), static_cast<Eigen::Index>(J.size()));
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
          m(r, c) = s_.at(L[static_cast<size_t>(r / 2)], static_cast<int>(r % 2), -1, J[static_cast<size_t>(c)]);
      Cross cr = full_cross(m, static_cast<int>(J.size()), -1.0);
      IndexSet ni, nj;
      for (size_t k = 0; k < cr.rows.size(); ++k) {
        ni.push_back(concat(L[static_cast<size_t>(cr.rows[k] / 2)], cr.rows[k] % 2));
        nj.push_back(J[static_cast<size_t>(cr.cols[k])]);
      }
      I_[static_cast<size_t>(b)] = std::move(ni);
      J_[static_cast<size_t>(b)] = std::move(nj);
    }
  }

  Mps assemble(TciStats& st) {
    Mps m;
    m.tensors.resize(static_cast<size_t>(n_));
    for (int b = 0; b < n_; ++b) {
      const IndexSet& L = left_of(b);
      const IndexSet& J = b + 1 < n_ ? J_[static_cast<size_t>(b)] : empty_;
      Site t;
      for (int s = 0; s < 2; ++s) {
        MatC a(static_cast<Eigen::Index>(L.size()), static_cast<Eigen::Index>(J.size()));
        for (Eigen::Index i = 0; i < a.rows(); ++i)
          for (Eigen::Index j = 0; j < a.cols(); ++j)
            a(i, j) = s_.at(L[static_cast<size_t>(i)], s, -1, J[static_cast<size_t>(j)]);
        t[static_cast<size_t>(s)] = a;
      }
      if (b + 1 < n_) {
        const IndexSet& I = I_[static_cast<size_t>(b)];
        MatC p(static_cast<Eigen::Index>(I.size()), static_cast<Eigen::Index>(J.size()));
        for (Eigen::Index i = 0; i < p.rows(); ++i)
          for (Eigen::Index j = 0; j < p.cols(); ++j)
            p(i, j) = s_.at(I[static_cast<size_t>(i)], -1, -1, J[static_cast<size_t>(j)]);
        Eigen::PartialPivLU<MatC> lu(p.transpose());
        double rc = lu.rcond();
        double cond = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
        st.max_condition = std::max(st.max_condition, cond);
        if (cond > opt_.max_condition)
          throw std::runtime_error("tci_build: pivot matrix at bond " + std::to_string(b) +
                                   " is ill-conditioned (estimate " + std::to_string(cond) +
                                   "); raise tol or lower chi_max");
        for (auto& a : t) a = lu.solve(a.transpose()).transpose();
      }
      m.tensors[static_cast<size_t>(b)] = t;
    }
    m.gauge = Gauge::none();
    return canonicalize(m, Gauge::right());
  }

  double pivot_residual(const Mps& m) {
    double worst = 0.0;
    for (int b = 0; b + 1 < n_; ++b)
      for (const auto& i : I_[static_cast<size_t>(b)])
        for (const auto& j : J_[static_cast<size_t>(b)]) {
          Index x = i;
          x.insert(x.end(), j.begin(), j.end());
          worst = std::max(worst, std::abs(mps_amplitude(m, x) - s_(x)));
        }
    return s_.fmax() > 0.0 ? worst / s_.fmax() : worst;
  }

  Sampler s_;
  int n_;
  TciOptions opt_;
  std::vector<IndexSet> I_, J_;
  std::vector<int> last_ranks_;
  const IndexSet empty_{Index{}};
};

}  // namespace

TciResult tci_build(const BitFunction& f, int n_bits, const TciOptions& opt) {
  Tci t(f, n_bits, opt);
  return t.run();
}

TciResult tci_build(const QuanticsGrid& grid, const TciOptions& opt) {
  BitFunction f = [&grid](const std::vector<int>& bits) { return grid.f(quantics_index_to_point(bits)); };
  return tci_build(f, grid.n_bits, opt);
}

}  // namespace mpsprep
