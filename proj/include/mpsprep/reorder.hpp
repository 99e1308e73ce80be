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

#ifndef MPSPREP_REORDER_HPP
#define MPSPREP_REORDER_HPP

#include <string>
#include <vector>

#include "mpsprep/mps.hpp"

namespace mpsprep {

/// pi[q] is the chain position assigned to qubit q.
struct PermutationPlan {
  std::vector<int> pi;
  double eta = 1.0;
  double cost_before = 0.0;
  double cost_after = 0.0;
  std::vector<int> frozen;
  double entropy_before_max = 0.0;
  double entropy_after_max = 0.0;
  std::string warning;

  int size() const { return static_cast<int>(pi.size()); }
  bool is_identity() const;
  /// Throws std::invalid_argument unless pi is a bijection fixing `frozen`.
  void validate() const;
};

/// Sum over ordered pairs of I_ij |pi(i) - pi(j)|^eta.
double qap_cost(const QmiMatrix& qmi, const std::vector<int>& pi, double eta);

struct ReorderOptions {
  double eta = 1.0;
  std::vector<int> frozen;
  int restarts = 16;
  std::uint64_t seed = 0;
  bool anneal = false;
  int anneal_sweeps = 200;
};

/// Best-improvement pairwise-swap descent from the identity and `restarts`
/// random starts, optionally refined by simulated annealing. Minimizes for
/// eta > 0 and maximizes for eta < 0. Equal costs resolve to the
/// lexicographically smallest pi.
PermutationPlan optimize_permutation(const QmiMatrix& qmi, const ReorderOptions& opt);

/// Moves qubit q to site plan.pi[q] with a bubble-sort network of adjacent
/// SWAPs. Throws std::runtime_error if the accumulated discarded weight
/// exceeds `max_discarded`.
MpsResult apply_permutation(const Mps& mps, const PermutationPlan& plan, int chi_max, double eps,
                            double max_discarded = 1e-8);

/// Fills entropy_before_max / entropy_after_max from the two states.
void record_entropies(PermutationPlan& plan, const Mps& before, const Mps& after);

std::string plan_to_json(const PermutationPlan& plan);
PermutationPlan plan_from_json(const std::string& text);
void write_plan(const std::string& path, const PermutationPlan& plan);
PermutationPlan read_plan(const std::string& path);

}  // namespace mpsprep

#endif  // MPSPREP_REORDER_HPP
