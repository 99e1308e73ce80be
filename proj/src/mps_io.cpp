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

// MPSC container and raw dense amplitude files. All integers and floats are
// little-endian; the host is assumed to be little-endian as well.

#include <bit>
#include <cstring>
#include <fstream>

#include "mpsprep/mps.hpp"

namespace mpsprep {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

namespace {

constexpr char kMagic[4] = {'M', 'P', 'S', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) throw std::runtime_error("read_mps: truncated file");
  return v;
}

double get_f64(std::istream& is) {
  double v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8)) throw std::runtime_error("read_mps: truncated file");
  return v;
}

// Site that carries the norm in each gauge.
int norm_site(const Mps& m) {
  switch (m.gauge.kind) {
    case GaugeKind::Left: return m.size() - 1;
    case GaugeKind::Mixed: return m.gauge.center;
    default: return 0;
  }
}

}  // namespace

void write_mps(const std::string& path, const Mps& mps) {
  mps.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_mps: cannot open " + path);
  // norm_log is folded into the norm-carrying tensor so the file holds the
  // vector itself.
  Mps m = mps;
  double scale = std::exp(m.norm_log);
  for (auto& a : m.tensors[static_cast<size_t>(norm_site(m))]) a *= scale;
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(m.size()));
  char g = static_cast<char>(m.gauge.kind);
  os.write(&g, 1);
  for (const Site& s : m.tensors) {
    auto l = static_cast<std::uint32_t>(s[0].rows()), r = static_cast<std::uint32_t>(s[0].cols());
    put_u32(os, l);
    put_u32(os, r);
    for (int p = 0; p < 2; ++p)
      for (std::uint32_t i = 0; i < l; ++i)
        for (std::uint32_t j = 0; j < r; ++j) {
          cplx z = s[static_cast<size_t>(p)](i, j);
          put_f64(os, z.real());
          put_f64(os, z.imag());
        }
  }
  if (m.gauge.kind == GaugeKind::Vidal) {
    for (const VecR& l : m.singular_values) {
      put_u32(os, static_cast<std::uint32_t>(l.size()));
      for (Eigen::Index k = 0; k < l.size(); ++k) put_f64(os, l(k));
    }
  }
  if (m.gauge.kind == GaugeKind::Mixed) put_u32(os, static_cast<std::uint32_t>(m.gauge.center));
  if (!os) throw std::runtime_error("write_mps: write failed for " + path);
}

Mps read_mps(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_mps: cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("read_mps: bad magic in " + path);
  if (get_u32(is) != kVersion) throw std::runtime_error("read_mps: unsupported version");
  std::uint32_t n = get_u32(is);
  if (n == 0 || n > 4096) throw std::runtime_error("read_mps: implausible site count");
  char g = 0;
  if (!is.read(&g, 1) || g < 0 || g > 4) throw std::runtime_error("read_mps: bad gauge byte");
  Mps m;
  m.gauge.kind = static_cast<GaugeKind>(g);
  m.tensors.resize(n);
  for (auto& s : m.tensors) {
    std::uint32_t l = get_u32(is), r = get_u32(is);
    if (l == 0 || r == 0 || l > (1u << 16) || r > (1u << 16)) throw std::runtime_error("read_mps: bad bond");
    for (auto& a : s) a.resize(l, r);
    for (int p = 0; p < 2; ++p)
      for (std::uint32_t i = 0; i < l; ++i)
        for (std::uint32_t j = 0; j < r; ++j) {
          double re = get_f64(is), im = get_f64(is);
          s[static_cast<size_t>(p)](i, j) = cplx(re, im);
        }
  }
  if (m.gauge.kind == GaugeKind::Vidal) {
    m.singular_values.resize(n - 1);
    for (auto& l : m.singular_values) {
      std::uint32_t k = get_u32(is);
      l.resize(k);
      for (std::uint32_t t = 0; t < k; ++t) l(t) = get_f64(is);
    }
  }
  if (m.gauge.kind == GaugeKind::Mixed) m.gauge.center = static_cast<int>(get_u32(is));
  m.validate();
  // Restore unit-norm canonical tensors; the scale goes back into norm_log.
  if (m.gauge.kind != GaugeKind::None) {
    Site& s = m.tensors[static_cast<size_t>(norm_site(m))];
    double nrm = std::sqrt(s[0].squaredNorm() + s[1].squaredNorm());
    if (m.gauge.kind == GaugeKind::Vidal && m.size() > 1) {
      // Gamma_0 Lambda_0 is right-orthonormal, so its norm is 1 up to the scale.
      MatC a0 = s[0] * m.singular_values[0].cast<cplx>().asDiagonal();
      MatC a1 = s[1] * m.singular_values[0].cast<cplx>().asDiagonal();
      nrm = std::sqrt(a0.squaredNorm() + a1.squaredNorm());
    }
    if (nrm > 0.0) {
      for (auto& a : s) a /= nrm;
      m.norm_log = std::log(nrm);
    }
  }
  return m;
}

void write_dense(const std::string& path, const VecC& amp) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_dense: cannot open " + path);
  for (Eigen::Index k = 0; k < amp.size(); ++k) {
    put_f64(os, amp(k).real());
    put_f64(os, amp(k).imag());
  }
  if (!os) throw std::runtime_error("write_dense: write failed for " + path);
}

VecC read_dense(const std::string& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw std::runtime_error("read_dense: cannot open " + path);
  auto bytes = static_cast<std::uint64_t>(is.tellg());
  is.seekg(0);
  if (bytes % 16 != 0) throw std::runtime_error("read_dense: size is not a multiple of 16 bytes");
  std::uint64_t n = bytes / 16;
  if (n == 0 || (n & (n - 1)) != 0) throw std::runtime_error("read_dense: length is not a power of two");
  if (n > (std::uint64_t{1} << kMaxDenseQubits)) throw std::runtime_error("read_dense: more than 24 qubits");
  VecC v(static_cast<Eigen::Index>(n));
  for (std::uint64_t k = 0; k < n; ++k) {
    double re = get_f64(is), im = get_f64(is);
    v(static_cast<Eigen::Index>(k)) = cplx(re, im);
  }
  return v;
}

}  // namespace mpsprep
