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

#include "mpsprep/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace mpsprep {

using nlohmann::json;

const char* gate_kind_name(GateKind k) {
  switch (k) {
    case GateKind::Generic1: return "generic1";
    case GateKind::Generic2: return "generic2";
    case GateKind::Cnot: return "cnot";
    case GateKind::Rx: return "rx";
    case GateKind::Ry: return "ry";
    case GateKind::Rz: return "rz";
  }
  return "?";
}

namespace {

GateKind kind_from_name(const std::string& s) {
  for (GateKind k : {GateKind::Generic1, GateKind::Generic2, GateKind::Cnot, GateKind::Rx, GateKind::Ry, GateKind::Rz})
    if (s == gate_kind_name(k)) return k;
  throw std::invalid_argument("circuit json: unknown gate kind '" + s + "'");
}

bool is_rotation(GateKind k) { return k == GateKind::Rx || k == GateKind::Ry || k == GateKind::Rz; }

// Single-qubit matrix h on qubit q lifted to the pair `pair`.
MatC embed(const MatC& h, int q, const std::vector<int>& pair) {
  MatC id = MatC::Identity(2, 2);
  return q == pair[0] ? kron(h, id) : kron(id, h);
}

// Two-qubit matrix of g expressed in the qubit order `pair`.
MatC in_order(const Gate& g, const std::vector<int>& pair) {
  MatC u = g.unitary();
  return g.qubits[0] == pair[0] ? u : swap_qubits(u);
}

}  // namespace

Gate Gate::generic(const MatC& m, std::vector<int> q) {
  Gate g;
  if (q.size() == 1 && m.rows() == 2 && m.cols() == 2) {
    g.kind = GateKind::Generic1;
  } else if (q.size() == 2 && m.rows() == 4 && m.cols() == 4) {
    g.kind = GateKind::Generic2;
  } else {
    throw std::invalid_argument("Gate::generic: matrix size does not match qubit count");
  }
  g.matrix = m;
  g.qubits = std::move(q);
  return g;
}

Gate Gate::cnot(int control, int target) {
  Gate g;
  g.kind = GateKind::Cnot;
  g.qubits = {control, target};
  return g;
}

Gate Gate::rotation(GateKind k, int qubit, double angle) {
  if (!is_rotation(k)) throw std::invalid_argument("Gate::rotation: not a rotation kind");
  Gate g;
  g.kind = k;
  g.qubits = {qubit};
  g.angle = angle;
  return g;
}

MatC Gate::unitary() const {
  switch (kind) {
    case GateKind::Generic1:
    case GateKind::Generic2: return matrix;
    case GateKind::Cnot: return cnot_matrix();
    case GateKind::Rx: return rx(angle);
    case GateKind::Ry: return ry(angle);
    case GateKind::Rz: return rz(angle);
  }
  return matrix;
}

Gate Gate::adjoint() const {
  Gate g = *this;
  if (kind == GateKind::Generic1 || kind == GateKind::Generic2) g.matrix = matrix.adjoint();
  if (is_rotation(kind)) g.angle = -angle;
  return g;
}

void Circuit::validate() const {
  if (n_qubits < 1) throw std::invalid_argument("circuit: n_qubits must be positive");
  for (size_t k = 0; k < gates.size(); ++k) {
    const Gate& g = gates[k];
    std::string where = "circuit: gate " + std::to_string(k);
    if (g.qubits.empty() || g.qubits.size() > 2) throw std::invalid_argument(where + " has bad arity");
    for (int q : g.qubits)
      if (q < 0 || q >= n_qubits) throw std::invalid_argument(where + " qubit out of range");
    if (g.qubits.size() == 2 && g.qubits[0] == g.qubits[1]) throw std::invalid_argument(where + " repeats a qubit");
    bool two = g.kind == GateKind::Generic2 || g.kind == GateKind::Cnot;
    if (two != (g.qubits.size() == 2)) throw std::invalid_argument(where + " arity does not match kind");
    if ((g.kind == GateKind::Generic1 || g.kind == GateKind::Generic2) && !is_unitary(g.matrix, 1e-10))
      throw std::invalid_argument(where + " is not unitary");
  }
}

int Circuit::count(GateKind k) const {
  return static_cast<int>(std::count_if(gates.begin(), gates.end(), [k](const Gate& g) { return g.kind == k; }));
}

int Circuit::two_qubit_count() const {
  return static_cast<int>(std::count_if(gates.begin(), gates.end(), [](const Gate& g) { return g.is_two_qubit(); }));
}

Circuit inverse(const Circuit& c) {
  Circuit out;
  out.n_qubits = c.n_qubits;
  out.metadata = c.metadata;
  for (auto it = c.gates.rbegin(); it != c.gates.rend(); ++it) out.gates.push_back(it->adjoint());
  return out;
}

std::string circuit_to_json(const Circuit& c) {
  json j;
  j["version"] = 1;
  j["n_qubits"] = c.n_qubits;
  j["tags"] = c.metadata;
  json gates = json::array();
  for (const Gate& g : c.gates) {
    json e;
    e["kind"] = gate_kind_name(g.kind);
    e["qubits"] = g.qubits;
    if (is_rotation(g.kind)) e["angle"] = g.angle;
    if (g.kind == GateKind::Generic1 || g.kind == GateKind::Generic2) {
      std::vector<double> m;
      for (Eigen::Index r = 0; r < g.matrix.rows(); ++r)
        for (Eigen::Index col = 0; col < g.matrix.cols(); ++col) {
          m.push_back(g.matrix(r, col).real());
          m.push_back(g.matrix(r, col).imag());
        }
      e["matrix"] = m;
    }
    if (g.layer >= 0) e["layer"] = g.layer;
    if (!g.origin.empty()) e["origin"] = g.origin;
    gates.push_back(e);
  }
  j["gates"] = gates;
  return j.dump();
}

Circuit circuit_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.value("version", 0) != 1) throw std::invalid_argument("circuit json: unsupported version");
  Circuit c;
  c.n_qubits = j.at("n_qubits").get<int>();
  if (j.contains("tags")) c.metadata = j["tags"].get<std::map<std::string, std::string>>();
  for (const auto& e : j.at("gates")) {
    Gate g;
    g.kind = kind_from_name(e.at("kind").get<std::string>());
    g.qubits = e.at("qubits").get<std::vector<int>>();
    if (e.contains("angle")) g.angle = e["angle"].get<double>();
    if (e.contains("matrix")) {
      auto m = e["matrix"].get<std::vector<double>>();
      Eigen::Index d = g.kind == GateKind::Generic2 ? 4 : 2;
      if (static_cast<Eigen::Index>(m.size()) != 2 * d * d) throw std::invalid_argument("circuit json: bad matrix size");
      g.matrix.resize(d, d);
      for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index col = 0; col < d; ++col) {
          size_t k = static_cast<size_t>(2 * (r * d + col));
          g.matrix(r, col) = cplx(m[k], m[k + 1]);
        }
    }
    g.layer = e.value("layer", -1);
    g.origin = e.value("origin", std::string());
    c.gates.push_back(std::move(g));
  }
  c.validate();
  return c;
}

void write_circuit(const std::string& path, const Circuit& c) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_circuit: cannot open " + path);
  os << circuit_to_json(c) << '\n';
}

Circuit read_circuit(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_circuit: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return circuit_from_json(ss.str());
}

std::string circuit_to_qasm(const Circuit& c) {
  std::ostringstream os;
  os.precision(17);
  os << "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[" << c.n_qubits << "];\n";
  for (const Gate& g : c.gates) {
    switch (g.kind) {
      case GateKind::Cnot: os << "cx q[" << g.qubits[0] << "],q[" << g.qubits[1] << "];\n"; break;
      case GateKind::Rx: os << "rx(" << g.angle << ") q[" << g.qubits[0] << "];\n"; break;
      case GateKind::Ry: os << "ry(" << g.angle << ") q[" << g.qubits[0] << "];\n"; break;
      case GateKind::Rz: os << "rz(" << g.angle << ") q[" << g.qubits[0] << "];\n"; break;
      case GateKind::Generic1: {
        // u3(theta, phi, lambda) up to global phase.
        const MatC& u = g.matrix;
        double theta = 2.0 * std::atan2(std::abs(u(1, 0)), std::abs(u(0, 0)));
        double alpha = std::abs(u(0, 0)) > 1e-12 ? std::arg(u(0, 0)) : std::arg(u(1, 0)) ;
        double phi = 0.0, lam = 0.0;
        if (std::abs(u(0, 0)) > 1e-12 && std::abs(u(1, 0)) > 1e-12) {
          phi = std::arg(u(1, 0)) - alpha;
          lam = std::arg(-u(0, 1)) - alpha;
        } else if (std::abs(u(0, 0)) > 1e-12) {
          lam = std::arg(u(1, 1)) - alpha;
        } else {
          // theta = pi: u = e^{i alpha}[[0, -e^{i lam}], [e^{i phi}, 0]] with phi = 0.
          lam = std::arg(-u(0, 1)) - alpha;
        }
        os << "u3(" << theta << "," << phi << "," << lam << ") q[" << g.qubits[0] << "];\n";
        break;
      }
      case GateKind::Generic2:
        throw std::invalid_argument("circuit_to_qasm: lower generic two-qubit gates first");
    }
  }
  return os.str();
}

Circuit lower_generic_gates(const Circuit& c) {
  Circuit out;
  out.n_qubits = c.n_qubits;
  out.metadata = c.metadata;
  for (const Gate& g : c.gates) {
    if (g.kind != GateKind::Generic2) {
      out.gates.push_back(g);
      continue;
    }
    for (Gate d : decompose_su4(g.matrix, g.qubits[0], g.qubits[1])) {
      d.layer = g.layer;
      d.origin = g.origin;
      out.gates.push_back(std::move(d));
    }
  }
  return out;
}

Circuit absorb_adjacent_gates(const Circuit& c) {
  std::vector<Gate> out;
  std::vector<bool> alive;
  std::vector<std::vector<int>> stack(static_cast<size_t>(c.n_qubits));
  auto last_on = [&](int q) {
    auto& s = stack[static_cast<size_t>(q)];
    while (!s.empty() && !alive[static_cast<size_t>(s.back())]) s.pop_back();
    return s.empty() ? -1 : s.back();
  };
  auto push = [&](Gate g) {
    int idx = static_cast<int>(out.size());
    for (int q : g.qubits) stack[static_cast<size_t>(q)].push_back(idx);
    out.push_back(std::move(g));
    alive.push_back(true);
  };
  auto upgrade = [](Gate& g) {
    if (is_rotation(g.kind)) {
      g.matrix = g.unitary();
      g.kind = GateKind::Generic1;
    }
  };
  for (Gate g : c.gates) {
    if (g.arity() == 1) {
      int h = last_on(g.qubits[0]);
      if (h >= 0 && out[static_cast<size_t>(h)].kind != GateKind::Cnot) {
        Gate& tgt = out[static_cast<size_t>(h)];
        upgrade(tgt);
        if (tgt.arity() == 1) {
          tgt.matrix = g.unitary() * tgt.matrix;
        } else {
          tgt.matrix = embed(g.unitary(), g.qubits[0], tgt.qubits) * tgt.matrix;
        }
        continue;
      }
      push(std::move(g));
      continue;
    }
    int a = g.qubits[0], b = g.qubits[1];
    if (g.kind == GateKind::Cnot) {
      int ha = last_on(a), hb = last_on(b);
      if (ha >= 0 && ha == hb && out[static_cast<size_t>(ha)].kind == GateKind::Cnot &&
          out[static_cast<size_t>(ha)].qubits == g.qubits) {
        alive[static_cast<size_t>(ha)] = false;
        continue;
      }
      push(std::move(g));
      continue;
    }
    // Generic two-qubit gate: swallow trailing single-qubit gates first.
    for (int q : {a, b}) {
      int h = last_on(q);
      while (h >= 0 && out[static_cast<size_t>(h)].arity() == 1) {
        g.matrix = g.matrix * embed(out[static_cast<size_t>(h)].unitary(), q, g.qubits);
        alive[static_cast<size_t>(h)] = false;
        h = last_on(q);
      }
    }
    int ha = last_on(a), hb = last_on(b);
    if (ha >= 0 && ha == hb && out[static_cast<size_t>(ha)].kind == GateKind::Generic2) {
      Gate& tgt = out[static_cast<size_t>(ha)];
      tgt.matrix = in_order(g, tgt.qubits) * tgt.matrix;
      continue;
    }
    push(std::move(g));
  }
  Circuit res;
  res.n_qubits = c.n_qubits;
  res.metadata = c.metadata;
  for (size_t k = 0; k < out.size(); ++k)
    if (alive[k]) res.gates.push_back(std::move(out[k]));
  return res;
}

CnotMetrics cnot_metrics(const Circuit& c) {
  CnotMetrics m;
  std::vector<int> depth(static_cast<size_t>(c.n_qubits), 0);
  for (const Gate& g : c.gates) {
    if (g.kind == GateKind::Generic2)
      throw std::invalid_argument("cnot_metrics: circuit contains generic two-qubit gates; lower them first");
    if (g.kind != GateKind::Cnot) continue;
    auto& da = depth[static_cast<size_t>(g.qubits[0])];
    auto& db = depth[static_cast<size_t>(g.qubits[1])];
    int d = std::max(da, db) + 1;
    da = db = d;
    ++m.n_cnot;
    m.d_cnot = std::max(m.d_cnot, d);
  }
  return m;
}

int two_qubit_depth(const Circuit& c) {
  std::vector<int> depth(static_cast<size_t>(c.n_qubits), 0);
  int best = 0;
  for (const Gate& g : c.gates) {
    if (!g.is_two_qubit()) continue;
    auto& da = depth[static_cast<size_t>(g.qubits[0])];
    auto& db = depth[static_cast<size_t>(g.qubits[1])];
    da = db = std::max(da, db) + 1;
    best = std::max(best, da);
  }
  return best;
}

}  // namespace mpsprep
