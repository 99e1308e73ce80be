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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "circuit_oracle.hpp"
#include "mpsprep/circuit.hpp"

using namespace mpsprep;

namespace {

using oracle::swap_order;

VecC run_dense(const std::vector<Gate>& gates, VecC psi, int n) { return oracle::run_gates(gates, psi, n); }

MatC dense_matrix(const std::vector<Gate>& gates) {
  MatC m(4, 4);
  for (int c = 0; c < 4; ++c) {
    VecC e = VecC::Zero(4);
    e(c) = 1;
    m.col(c) = run_dense(gates, e, 2);
  }
  return m;
}

int count_cnots(const std::vector<Gate>& g) {
  int n = 0;
  for (const Gate& x : g) n += x.kind == GateKind::Cnot;
  return n;
}

}  // namespace

TEST(Decompose, HaarTwoQubitGatesAreExactWithThreeCnots) {
  Rng rng(2026);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    MatC u = haar_unitary(4, rng);
    auto g = decompose_su4(u, 0, 1);
    EXPECT_EQ(count_cnots(g), 3);
    worst = std::max(worst, (dense_matrix(g) - u).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Decompose, DegenerateInputs) {
  for (const MatC& u : {MatC(MatC::Identity(4, 4)), cnot_matrix(), swap_matrix(), MatC(kron(rx(0.3), rz(1.1)))}) {
    auto g = decompose_su4(u, 0, 1);
    EXPECT_EQ(count_cnots(g), 3);
    EXPECT_LE((dense_matrix(g) - u).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Decompose, ReversedQubitOrder) {
  Rng rng(5);
  MatC u = haar_unitary(4, rng);
  auto g = decompose_su4(u, 1, 0);
  EXPECT_LE((dense_matrix(g) - swap_order(u)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Decompose, IsometriesAreExactWithTwoCnots) {
  Rng rng(77);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    MatC iso = haar_unitary(4, rng).leftCols(2);
    bool first = t % 2 == 0;
    auto g = decompose_isometry_1to2(iso, first, 0, 1);
    EXPECT_EQ(count_cnots(g), 2);
    MatC m = dense_matrix(g);
    // Ancilla first: inputs are columns 0, 1; ancilla second: columns 0, 2.
    MatC got(4, 2);
    got.col(0) = m.col(0);
    got.col(1) = m.col(first ? 1 : 2);
    worst = std::max(worst, (got - iso).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Decompose, ProductIsometry) {
  // |0> (x) |in>: the circuit must not disturb the input.
  MatC iso = MatC::Zero(4, 2);
  iso(0, 0) = 1;
  iso(1, 1) = 1;
  auto g = decompose_isometry_1to2(iso, true, 0, 1);
  MatC m = dense_matrix(g);
  EXPECT_LE((m.leftCols(2) - iso).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Decompose, NearlyLocalInputs) {
  // Small entangling perturbations of local gates have nearly degenerate
  // magic-basis spectra.
  Rng rng(31);
  for (double eps : {1e-3, 1e-5, 1e-7, 1e-9}) {
    for (int t = 0; t < 10; ++t) {
      MatC h = random_complex(4, 4, rng);
      h = (h + h.adjoint()).eval();
      MatC local = kron(haar_unitary(2, rng), haar_unitary(2, rng));
      MatC u = local * expi_hermitian(eps * h) * kron(haar_unitary(2, rng), haar_unitary(2, rng));
      EXPECT_LE((dense_matrix(decompose_su4(u, 0, 1)) - u).cwiseAbs().maxCoeff(), 1e-10) << eps;
      MatC iso = u.leftCols(2);
      // The ZZ angle of an isometry is fixed only to about sqrt(machine eps)
      // once the entangling part drops below that scale.
      EXPECT_LE((dense_matrix(decompose_isometry_1to2(iso, true, 0, 1)).leftCols(2) - iso).cwiseAbs().maxCoeff(),
                1e-9)
          << eps;
    }
  }
  // Isometry seen in a staircase layer of a smooth state.
  MatC iso(4, 2);
  iso << cplx(-0.94742755505229848, 0.31997035476360436), cplx(-1.7708890327306889e-07, -2.1486607153161834e-07),
      cplx(-2.6380005320801742e-07, 8.9091980111485611e-08), cplx(0.63600761359855151, 0.77168277962190868),
      cplx(2.1917817369043262e-10, -7.4022037458637309e-11), cplx(-2.2534391347479191e-05, -2.7341499340897669e-05),
      cplx(-2.192395910533803e-09, 7.404277308779962e-10), cplx(2.7164648697057035e-05, 3.2959497921080263e-05);
  EXPECT_LE((dense_matrix(decompose_isometry_1to2(iso, true, 0, 1)).leftCols(2) - iso).cwiseAbs().maxCoeff(), 1e-10);
  // Here the pairing residual touches zero near the closed-form angle without
  // crossing; the root lies elsewhere in the period.
  MatC touch(4, 2);
  touch << cplx(-0.31903739472325399, -0.94774212777959488), cplx(4.0698389475826045e-08, 5.6511918650948523e-08),
      cplx(-2.2225185953497473e-08, -6.5999976558856352e-08), cplx(-0.58448235051531583, -0.81140642216060233),
      cplx(-4.6269007845961203e-12, -1.380831419519025e-11), cplx(-1.3521270484516869e-06, -1.8861043653952271e-06),
      cplx(4.6259801806479176e-11, 1.3782527700219049e-10), cplx(1.5687564829890664e-06, 2.1842238520075626e-06);
  EXPECT_LE((dense_matrix(decompose_isometry_1to2(touch, true, 0, 1)).leftCols(2) - touch).cwiseAbs().maxCoeff(),
            1e-10);
}

TEST(Decompose, RejectsNonUnitary) {
  EXPECT_THROW(decompose_su4(MatC::Ones(4, 4), 0, 1), std::invalid_argument);
  EXPECT_THROW(decompose_isometry_1to2(MatC::Ones(4, 2), true, 0, 1), std::invalid_argument);
}

TEST(Circuit, InverseUndoesCircuit) {
  Rng rng(3);
  Circuit c;
  c.n_qubits = 3;
  c.append(Gate::rotation(GateKind::Ry, 0, 0.4));
  c.append(Gate::cnot(0, 1));
  c.append(Gate::generic(haar_unitary(4, rng), {2, 1}));
  c.append(Gate::generic(haar_unitary(2, rng), {2}));
  Circuit both = c;
  both.append(inverse(c).gates);
  VecC psi = oracle::random_state(3, rng);
  EXPECT_LE((run_dense(both.gates, psi, 3) - psi).norm(), 1e-12);
}

TEST(Circuit, ValidateRejectsBadGates) {
  Circuit c;
  c.n_qubits = 2;
  c.append(Gate::cnot(0, 2));
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.gates = {Gate::cnot(1, 1)};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  Gate g = Gate::generic(MatC::Identity(2, 2), {0});
  g.matrix(0, 0) = 2.0;
  c.gates = {g};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(Gate::generic(MatC::Identity(4, 4), {0}), std::invalid_argument);
}

TEST(Circuit, JsonRoundTrip) {
  Rng rng(9);
  Circuit c;
  c.n_qubits = 3;
  c.metadata["source"] = "test";
  c.append(Gate::rotation(GateKind::Rz, 1, -0.25));
  Gate g = Gate::generic(haar_unitary(4, rng), {1, 2});
  g.layer = 4;
  g.origin = "smpd";
  c.append(g);
  c.append(Gate::cnot(2, 1));
  auto path = std::filesystem::temp_directory_path() / "mpsprep_circuit_rt.json";
  write_circuit(path.string(), c);
  Circuit r = read_circuit(path.string());
  std::filesystem::remove(path);
  ASSERT_EQ(r.gates.size(), 3u);
  EXPECT_EQ(r.metadata.at("source"), "test");
  EXPECT_EQ(r.gates[1].layer, 4);
  EXPECT_EQ(r.gates[1].origin, "smpd");
  EXPECT_EQ(r.gates[2].qubits, (std::vector<int>{2, 1}));
  EXPECT_DOUBLE_EQ(r.gates[0].angle, -0.25);
  EXPECT_EQ((r.gates[1].matrix - g.matrix).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(circuit_from_json(R"({"version":2,"n_qubits":1,"gates":[]})"), std::invalid_argument);
}

TEST(Circuit, QasmSingleQubitAnglesReproduceGate) {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    Circuit c;
    c.n_qubits = 1;
    MatC u = haar_unitary(2, rng);
    if (t == 0) u = pauli_x();
    if (t == 1) u = rz(0.7);
    c.append(Gate::generic(u, {0}));
    std::string q = circuit_to_qasm(c);
    double th, ph, la;
    auto pos = q.find("u3(");
    ASSERT_NE(pos, std::string::npos);
    ASSERT_EQ(std::sscanf(q.c_str() + pos, "u3(%lf,%lf,%lf)", &th, &ph, &la), 3);
    const cplx i(0, 1);
    MatC v(2, 2);
    v << std::cos(th / 2), -std::exp(i * la) * std::sin(th / 2), std::exp(i * ph) * std::sin(th / 2),
        std::exp(i * (ph + la)) * std::cos(th / 2);
    // Equal up to global phase.
    cplx ov = (v.adjoint() * u).trace() / 2.0;
    EXPECT_NEAR(std::abs(ov), 1.0, 1e-10) << t;
  }
  Circuit c2;
  c2.n_qubits = 2;
  c2.append(Gate::generic(MatC::Identity(4, 4), {0, 1}));
  EXPECT_THROW(circuit_to_qasm(c2), std::invalid_argument);
  EXPECT_NE(circuit_to_qasm(lower_generic_gates(c2)).find("cx q[1],q[0];"), std::string::npos);
}

TEST(Absorb, RotationsMergeAndCnotsCancel) {
  Circuit c;
  c.n_qubits = 2;
  c.append(Gate::rotation(GateKind::Rz, 0, 0.3));
  c.append(Gate::rotation(GateKind::Rz, 0, 0.4));
  c.append(Gate::cnot(0, 1));
  c.append(Gate::cnot(0, 1));
  Circuit a = absorb_adjacent_gates(c);
  ASSERT_EQ(a.gates.size(), 1u);
  EXPECT_EQ(a.gates[0].kind, GateKind::Generic1);
  EXPECT_LE((a.gates[0].matrix - rz(0.7)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Absorb, ReversedCnotsDoNotCancel) {
  Circuit c;
  c.n_qubits = 2;
  c.append(Gate::cnot(0, 1));
  c.append(Gate::cnot(1, 0));
  EXPECT_EQ(absorb_adjacent_gates(c).gates.size(), 2u);
}

TEST(Absorb, TwoQubitGatesSwallowNeighboursAndPreserveState) {
  Rng rng(21);
  Circuit c;
  c.n_qubits = 4;
  c.append(Gate::generic(haar_unitary(2, rng), {1}));
  c.append(Gate::rotation(GateKind::Rx, 2, 0.9));
  c.append(Gate::generic(haar_unitary(4, rng), {1, 2}));
  c.append(Gate::generic(haar_unitary(4, rng), {2, 1}));
  c.append(Gate::cnot(2, 3));
  c.append(Gate::generic(haar_unitary(2, rng), {2}));
  c.append(Gate::generic(haar_unitary(2, rng), {3}));
  c.append(Gate::generic(haar_unitary(4, rng), {0, 1}));
  Circuit a = absorb_adjacent_gates(c);
  // Singles on 1, 2 fold into the first Generic2, the reversed gate merges;
  // the single on 2 after the CNOT has no two-qubit host, so it stays.
  EXPECT_EQ(a.gates.size(), 5u);
  EXPECT_EQ(a.two_qubit_count(), 3);
  VecC psi = oracle::random_state(4, rng);
  EXPECT_LE((run_dense(a.gates, psi, 4) - run_dense(c.gates, psi, 4)).norm(), 1e-12);
}

TEST(Metrics, CnotCountAndDepth) {
  Circuit c;
  c.n_qubits = 4;
  c.append(Gate::cnot(0, 1));
  c.append(Gate::cnot(2, 3));
  c.append(Gate::rotation(GateKind::Rz, 1, 0.1));
  c.append(Gate::cnot(1, 2));
  c.append(Gate::cnot(0, 1));
  auto m = cnot_metrics(c);
  EXPECT_EQ(m.n_cnot, 4);
  EXPECT_EQ(m.d_cnot, 3);
  EXPECT_EQ(two_qubit_depth(c), 3);
  c.append(Gate::generic(MatC::Identity(4, 4), {2, 3}));
  EXPECT_THROW(cnot_metrics(c), std::invalid_argument);
  EXPECT_EQ(two_qubit_depth(c), 3);
}

TEST(Simulate, MatchesDenseOracle) {
  Rng rng(31);
  const int n = 6;
  Circuit c;
  c.n_qubits = n;
  for (int layer = 0; layer < 4; ++layer)
    for (int q = layer % 2; q + 1 < n; q += 2) {
      if (q % 3 == 0) {
        c.append(Gate::generic(haar_unitary(4, rng), {q + 1, q}));
      } else {
        c.append(Gate::generic(haar_unitary(4, rng), {q, q + 1}));
      }
      c.append(Gate::rotation(GateKind::Ry, q, 0.1 * layer));
    }
  c.append(Gate::cnot(4, 3));
  SimResult r = simulate(c, kUnbounded, 0.0);
  VecC want = run_dense(c.gates, oracle::zero_state(n), n);
  EXPECT_GE(oracle::fidelity(to_dense(r.state), want), 1.0 - 1e-12);
  EXPECT_LE(r.norm_error, 1e-12);
  EXPECT_LE(r.discarded_weight, 1e-20);
}

TEST(Simulate, TruncationReportsLoss) {
  Rng rng(32);
  Circuit c;
  c.n_qubits = 6;
  for (int layer = 0; layer < 6; ++layer)
    for (int q = layer % 2; q + 1 < 6; q += 2) c.append(Gate::generic(haar_unitary(4, rng), {q, q + 1}));
  SimResult r = simulate(c, 2, 0.0);
  EXPECT_GT(r.discarded_weight, 1e-3);
  EXPECT_LE(r.state.max_bond(), 2);
}

TEST(Simulate, RejectsNonAdjacentGates) {
  Circuit c;
  c.n_qubits = 3;
  c.append(Gate::cnot(0, 2));
  EXPECT_THROW(simulate(c, 8, 0.0), std::invalid_argument);
}
