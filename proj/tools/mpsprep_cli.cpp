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

// Command line front end. `run` executes a whole configured pipeline; the
// other subcommands run one stage on files written by earlier stages.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mpsprep/loader.hpp"
#include "mpsprep/pipeline.hpp"

using namespace mpsprep;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spill(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

// A --target naming an existing file is read as a state; anything else is a
// built-in source kind.
void set_target(json& source, const std::string& target) {
  if (fs::exists(target)) {
    source["kind"] = fs::path(target).extension() == ".mpsc" ? "mps_file" : "dense_file";
    source["path"] = target;
  } else if (target.find_first_of("/.") != std::string::npos) {
    throw std::invalid_argument("no such file: " + target);
  } else {
    source["kind"] = target;
  }
}

Mps read_target(const std::string& path) {
  Mps m = read_mps(path);
  m.norm_log -= 0.5 * std::log(norm_squared(m));
  return m;
}

void print_row(const MetricsRow& r) {
  std::printf("%-10s layer %2d step %5d  infidelity %.6e  n_cnot %5d  d_cnot %5d\n", r.stage.c_str(), r.layer,
              r.sweep_or_iter, r.infidelity, r.n_cnot, r.d_cnot);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mpsprep: MPS state preparation circuits"};
  app.require_subcommand(1);

  // Shared flag values.
  std::string target, gauge = "mixed", optimizer = "ev", out, config, circuit_path, source_method = "dense";
  int layers = 1, chi_tilde = 64, qubits = 20, sweeps = -1, iterations = -1, chi = 4;
  double beta = 0.6, lr = 1e-4, eta = 1.0;
  std::uint64_t seed = 0;

  // load
  CLI::App* load = app.add_subcommand("load", "Build a target MPS and write it as .mpsc");
  load->add_option("--target", target, "Source kind or dense/.mpsc file")->required();
  load->add_option("--qubits", qubits, "Number of qubits");
  load->add_option("--chi", chi, "Bond dimension for random_mps");
  load->add_option("--method", source_method, "dense or tci");
  load->add_option("--seed", seed, "Seed");
  load->add_option("--out", out, "Output .mpsc file")->required();

  // reorder
  CLI::App* reorder = app.add_subcommand("reorder", "Optimize the qubit order of an MPS");
  reorder->add_option("--target", target, ".mpsc file")->required()->check(CLI::ExistingFile);
  reorder->add_option("--eta", eta, "Distance exponent");
  reorder->add_option("--seed", seed, "Seed");
  reorder->add_option("--out", out, "Output directory")->required();

  // smpd / bmpd
  CLI::App* smpd = app.add_subcommand("smpd", "Sequential disentangling circuit");
  CLI::App* bmpd = app.add_subcommand("bmpd", "Brick-wall disentangling circuit");
  for (CLI::App* h : {smpd, bmpd}) {
    h->add_option("--target", target, ".mpsc file")->required()->check(CLI::ExistingFile);
    h->add_option("--layers", layers, "Number of layers");
    h->add_option("--chi-tilde", chi_tilde, "Bond dimension ceiling");
    h->add_option("--out", out, "Output directory")->required();
  }
  smpd->add_option("--gauge", gauge, "left, right or mixed");
  bmpd->add_option("--seed", seed, "Seed");

  // optimize
  CLI::App* optimize = app.add_subcommand("optimize", "Optimize a circuit against a target");
  optimize->add_option("--target", target, ".mpsc file")->required()->check(CLI::ExistingFile);
  optimize->add_option("--circuit", circuit_path, "Circuit JSON")->required()->check(CLI::ExistingFile);
  optimize->add_option("--optimizer", optimizer, "ev or riemannian");
  optimize->add_option("--beta", beta, "EV step");
  optimize->add_option("--lr", lr, "Adam learning rate");
  optimize->add_option("--sweeps", sweeps, "EV sweeps (default 1000)");
  optimize->add_option("--iterations", iterations, "Adam iterations (default 10000)");
  optimize->add_option("--chi-tilde", chi_tilde, "Bond dimension ceiling");
  optimize->add_option("--seed", seed, "Seed");
  optimize->add_option("--out", out, "Output directory")->required();

  // simulate
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Simulate a circuit from |0...0>");
  simulate_cmd->add_option("--circuit", circuit_path, "Circuit JSON")->required()->check(CLI::ExistingFile);
  simulate_cmd->add_option("--target", target, "Optional .mpsc file to compare against")->check(CLI::ExistingFile);
  simulate_cmd->add_option("--chi-tilde", chi_tilde, "Bond dimension ceiling");
  simulate_cmd->add_option("--out", out, "Output .mpsc file");

  // run
  CLI::App* run = app.add_subcommand("run", "Run the configured pipeline");
  run->add_option("--config", config, "Run config JSON")->check(CLI::ExistingFile);
  run->add_option("--target", target, "Source kind or dense/.mpsc file");
  run->add_option("--gauge", gauge, "SMPD gauge");
  std::string heuristic;
  run->add_option("--heuristic", heuristic, "smpd or bmpd");
  run->add_option("--layers", layers, "Number of layers");
  run->add_option("--chi-tilde", chi_tilde, "Bond dimension ceiling");
  run->add_option("--optimizer", optimizer, "none, ev or riemannian");
  run->add_option("--beta", beta, "EV step");
  run->add_option("--lr", lr, "Adam learning rate");
  run->add_option("--seed", seed, "Seed");
  run->add_option("--out", out, "Output directory");

  // report
  std::vector<std::string> csvs;
  CLI::App* report = app.add_subcommand("report", "Summarize metrics CSV files");
  report->add_option("csv", csvs, "metrics.csv files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", out, "Output directory for report.md and report.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*load) {
      json src;
      set_target(src, target);
      src["n_qubits"] = qubits;
      src["chi"] = chi;
      src["method"] = source_method;
      SourceConfig sc = run_config_from_json(json{{"version", 1}, {"seed", seed}, {"source", src}}.dump()).source;
      double loss = 0.0;
      Mps m = load_source(sc, seed, &loss);
      write_mps(out, m);
      std::printf("wrote %s: %d qubits, max bond %d, load infidelity %.3e\n", out.c_str(), m.size(), m.max_bond(),
                  loss);
    } else if (*reorder) {
      Mps m = read_target(target);
      ReorderOptions ro;
      ro.eta = eta;
      ro.seed = seed;
      PermutationPlan plan = optimize_permutation(qmi_matrix(m), ro);
      MpsResult moved = apply_permutation(m, plan, kUnbounded, 1e-14);
      record_entropies(plan, m, moved.mps);
      fs::create_directories(out);
      write_plan((fs::path(out) / "plan.json").string(), plan);
      write_mps((fs::path(out) / "target.mpsc").string(), moved.mps);
      std::printf("cost %.6g -> %.6g, max entropy %.4f -> %.4f\n", plan.cost_before, plan.cost_after,
                  plan.entropy_before_max, plan.entropy_after_max);
    } else if (*smpd || *bmpd) {
      Mps m = read_target(target);
      Circuit c;
      std::string trace;
      double inf = 1.0;
      if (*smpd) {
        SmpdConfig cfg;
        cfg.gauge = smpd_gauge_from_name(gauge);
        cfg.max_layers = layers;
        cfg.chi_tilde = chi_tilde;
        SmpdResult r = smpd_build(m, cfg);
        c = r.circuit;
        trace = smpd_trace_to_json(r.trace);
        inf = r.trace.back().infidelity;
      } else {
        BmpdConfig cfg;
        cfg.max_layers = layers;
        cfg.chi_tilde = chi_tilde;
        cfg.seed = seed;
        BmpdResult r = bmpd_build(m, cfg);
        c = r.circuit;
        trace = bmpd_trace_to_json(r);
        inf = r.trace.back().infidelity;
      }
      fs::create_directories(out);
      write_circuit((fs::path(out) / "circuit.json").string(), c);
      spill(fs::path(out) / "trace.json", trace + "\n");
      CnotMetrics cm = lowered_cnot_metrics(c);
      std::printf("%zu gates, n_cnot %d, d_cnot %d, infidelity %.6e\n", c.gates.size(), cm.n_cnot, cm.d_cnot, inf);
    } else if (*optimize) {
      Mps m = read_target(target);
      Circuit c = read_circuit(circuit_path);
      OptimizeResult r;
      if (optimizer_from_name(optimizer) == OptimizerKind::Ev) {
        EvOptions o;
        o.beta = beta;
        o.n_sweeps = sweeps >= 0 ? sweeps : 1000;
        o.chi_max = chi_tilde;
        r = ev_sweep(c, m, o);
      } else if (optimizer_from_name(optimizer) == OptimizerKind::Riemannian) {
        AdamOptions o;
        o.lr = lr;
        o.n_iter = iterations >= 0 ? iterations : 10000;
        o.chi_max = chi_tilde;
        r = riemannian_adam(c, m, o);
      } else {
        throw std::invalid_argument("optimize needs --optimizer ev or riemannian");
      }
      fs::create_directories(out);
      write_circuit((fs::path(out) / "circuit.json").string(), r.circuit);
      std::string hist = "step,infidelity,seconds\n";
      for (const HistoryEntry& h : r.history)
        hist += std::to_string(h.step) + "," + std::to_string(h.infidelity) + "," + std::to_string(h.seconds) + "\n";
      spill(fs::path(out) / "history.csv", hist);
      if (!r.warning.empty()) std::fprintf(stderr, "warning: %s\n", r.warning.c_str());
      std::printf("infidelity %.6e -> %.6e\n", r.history.front().infidelity, r.history.back().infidelity);
    } else if (*simulate_cmd) {
      Circuit c = read_circuit(circuit_path);
      SimResult s = simulate(c, chi_tilde, 1e-14);
      if (!out.empty()) write_mps(out, s.state);
      std::printf("discarded weight %.3e, norm error %.3e\n", s.discarded_weight, s.norm_error);
      if (!target.empty()) std::printf("infidelity %.6e\n", 1.0 - fidelity(s.state, read_target(target)));
    } else if (*run) {
      json j = config.empty() ? json{{"version", 1}} : json::parse(slurp(config));
      if (!target.empty()) set_target(j["source"], target);
      if (run->count("--gauge")) j["heuristic"]["gauge"] = gauge;
      if (run->count("--heuristic")) j["heuristic"]["kind"] = heuristic;
      if (run->count("--layers")) j["heuristic"]["layers"] = layers;
      if (run->count("--chi-tilde")) j["simulation"]["chi_tilde"] = chi_tilde;
      if (run->count("--optimizer")) j["optimizer"]["kind"] = optimizer;
      if (run->count("--beta")) j["optimizer"]["beta"] = beta;
      if (run->count("--lr")) j["optimizer"]["lr"] = lr;
      if (run->count("--seed")) j["seed"] = seed;
      if (run->count("--out")) j["output"]["dir"] = out;
      RunConfig cfg = run_config_from_json(j.dump());
      RunMetrics m = run_pipeline(cfg);
      for (const MetricsRow& r : m.rows)
        if (r.stage != "optimize" || r.sweep_or_iter % 10 == 0) print_row(r);
      for (const std::string& w : m.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    } else if (*report) {
      std::vector<MetricsRow> rows;
      for (const std::string& p : csvs) {
        auto r = metrics_from_csv(slurp(p));
        rows.insert(rows.end(), r.begin(), r.end());
      }
      Report rep = build_report(rows);
      if (!out.empty()) {
        spill(fs::path(out) / "report.md", rep.markdown);
        spill(fs::path(out) / "report.csv", rep.csv);
      }
      std::fputs(rep.markdown.c_str(), stdout);
    }
  } catch (const PipelineError& e) {
    std::fprintf(stderr, "error in stage %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
