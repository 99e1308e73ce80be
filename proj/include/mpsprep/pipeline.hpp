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

#ifndef MPSPREP_PIPELINE_HPP
#define MPSPREP_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpsprep/optimize.hpp"
#include "mpsprep/reorder.hpp"

namespace mpsprep {

// Run configuration ------------------------------------------------------------
//
// JSON document, version 1. Unknown keys are rejected at every level. See
// README.md for the full key list.

struct SourceConfig {
  /// gaussian, levy, ghz, ising, random_mps, lorenz, synthetic, csv,
  /// mps_file, dense_file.
  std::string kind = "gaussian";
  int n_qubits = 20;
  double mu = 0.5;
  double sigma = 0.1;
  double levy_c = 32.0;
  double h_x = 0.5;
  int chi = 4;             // random_mps
  int k = 7;               // series length 2^k (synthetic, csv)
  int m = 3;               // up to 2^m series (synthetic, csv)
  double t_final = 8.0;    // lorenz
  double dt = 1.0 / 4096;  // lorenz
  std::string path;
  std::string method = "dense";  // dense or tci for gaussian / levy
  double eps_svd = 1e-14;
  int chi_max = kUnbounded;
};

struct ReorderConfig {
  bool enabled = false;
  double eta = 1.0;
  int restarts = 16;
  bool anneal = false;
};

enum class OptimizeMode { PostHoc, Interleaved };

struct RunConfig {
  int version = 1;
  std::string run_id = "run";
  std::optional<std::uint64_t> seed;
  SourceConfig source;
  ReorderConfig reorder;
  Heuristic heuristic = Heuristic::Smpd;
  int layers = 1;
  SmpdConfig smpd;
  BmpdConfig bmpd;
  OptimizerKind optimizer = OptimizerKind::None;
  OptimizeMode mode = OptimizeMode::PostHoc;
  EvOptions ev;  // n_sweeps defaults to 1000 post-hoc, 100 interleaved
  AdamOptions adam;  // n_iter defaults to 10000 post-hoc, 1000 interleaved
  int chi_tilde = 64;
  int chi_verify = 0;  // 0 selects 4 * chi_tilde
  double sim_eps_svd = 1e-14;
  double verify_threshold = 1e-4;
  std::string out_dir;
  bool timing = true;  // false writes 0 wall times for byte-stable replays

  /// True if any configured stage draws random numbers.
  bool stochastic() const;
  /// Throws std::invalid_argument on inconsistent values.
  void validate() const;
};

RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);
RunConfig read_run_config(const std::string& path);

// Metrics ----------------------------------------------------------------------

struct MetricsRow {
  std::string run_id;
  std::string stage;
  int layer = 0;
  int sweep_or_iter = 0;
  double infidelity = 0.0;
  int n_cnot = 0;
  int d_cnot = 0;
  double max_entropy = 0.0;  // NaN when not measured
  double discarded_weight = 0.0;
  double norm_error = 0.0;
  int chi_tilde = 0;
  double wall_time_s = 0.0;
};

std::string metrics_to_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> metrics_from_csv(const std::string& text);

struct RunMetrics {
  std::vector<MetricsRow> rows;
  Circuit circuit;
  Mps target;  // normalized, in chain order after reordering
  std::optional<PermutationPlan> plan;
  double infidelity = 1.0;         // simulated at chi_tilde
  double infidelity_verify = 1.0;  // simulated at chi_verify
  bool verify_flag = false;
  std::vector<std::string> warnings;
};

class PipelineError : public std::runtime_error {
 public:
  PipelineError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Builds the normalized target MPS. `loss` receives 1 - fidelity against the
/// dense source when one exists.
Mps load_source(const SourceConfig& src, std::optional<std::uint64_t> seed, double* loss = nullptr);

/// CNOT metrics with Generic2 gates lowered to three CNOTs.
CnotMetrics lowered_cnot_metrics(const Circuit& c);
/// Max von Neumann bond entropy of C^dag |target>.
double residual_max_entropy(const Circuit& c, const Mps& target, int chi_max);

/// load -> reorder -> heuristic -> optimize -> simulate -> verify. Writes
/// circuit.json, trace.json, metrics.csv and status.json into out_dir when it
/// is set; on failure the partial artifacts are written with a failed status
/// and PipelineError is thrown.
RunMetrics run_pipeline(const RunConfig& cfg);

// Report -----------------------------------------------------------------------

struct ReportEntry {
  std::string target;  // run_id up to the first ':'
  std::string run_id;
  double infidelity = 1.0;
  int n_cnot = 0;
  int d_cnot = 0;
  bool pareto_n_cnot = false;
  bool pareto_d_cnot = false;
};

struct Report {
  std::vector<ReportEntry> entries;
  std::string markdown;
  std::string csv;
};

/// Final row of each run (verify, else simulate, else the last row), then the
/// Pareto sets of (n_cnot, infidelity) and (d_cnot, infidelity) per target.
Report build_report(const std::vector<MetricsRow>& rows);

}  // namespace mpsprep

#endif  // MPSPREP_PIPELINE_HPP
