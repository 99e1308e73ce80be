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

#include "mpsprep/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mpsprep/loader.hpp"

namespace mpsprep {

namespace {

using json = nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Reads keys of one JSON object and rejects whatever was not asked for.
class Keys {
 public:
  Keys(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw std::invalid_argument(where_ + ": expected an object");
  }

  template <class T>
  bool get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return false;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(where_ + "." + key + ": " + e.what());
    }
    return true;
  }

  const json* object(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return nullptr;
    return &j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw std::invalid_argument(where_ + ": unknown key '" + item.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

const char* mode_name(OptimizeMode m) { return m == OptimizeMode::PostHoc ? "posthoc" : "interleaved"; }

OptimizeMode mode_from_name(const std::string& s) {
  if (s == "posthoc") return OptimizeMode::PostHoc;
  if (s == "interleaved") return OptimizeMode::Interleaved;
  throw std::invalid_argument("unknown optimizer mode '" + s + "'");
}

Mps normalized(Mps m) {
  double n2 = norm_squared(m);
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw std::invalid_argument("target state has zero or non-finite norm");
  m.norm_log -= 0.5 * std::log(n2);
  return m;
}

double dense_loss(const VecC& v, const Mps& m) {
  VecC d = to_dense(m);
  return std::max(0.0, 1.0 - std::norm(v.dot(d)) / (v.squaredNorm() * d.squaredNorm()));
}

double max_or_zero(const VecR& v) { return v.size() ? v.maxCoeff() : 0.0; }

std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

Circuit layers_up_to(const Circuit& c, int l) {
  Circuit out;
  out.n_qubits = c.n_qubits;
  for (const Gate& g : c.gates)
    if (g.layer <= l) out.gates.push_back(g);
  return out;
}

}  // namespace

// Config ----------------------------------------------------------------------

bool RunConfig::stochastic() const {
  if (source.kind == "random_mps" || source.kind == "synthetic") return true;
  if ((source.kind == "gaussian" || source.kind == "levy") && source.method == "tci") return true;
  if (reorder.enabled) return true;
  return heuristic == Heuristic::Bmpd;
}

void RunConfig::validate() const {
  if (version != 1) throw std::invalid_argument("config version must be 1");
  if (run_id.empty() || run_id.find_first_of(",\n\"") != std::string::npos)
    throw std::invalid_argument("run_id must be non-empty without commas, quotes or newlines");
  if (stochastic() && !seed) throw std::invalid_argument("seed is required for the configured stochastic stages");
  if (layers < 1) throw std::invalid_argument("layers must be at least 1");
  if (chi_tilde < 1 || chi_verify < 0) throw std::invalid_argument("chi_tilde must be positive, chi_verify non-negative");
  if (!(ev.beta > 0.0) || ev.beta > 1.0) throw std::invalid_argument("beta must be in (0, 1]");
  if (!(adam.lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (ev.n_sweeps < 0 || adam.n_iter < 0) throw std::invalid_argument("optimizer budgets must be non-negative");
  if (source.method != "dense" && source.method != "tci") throw std::invalid_argument("source.method must be dense or tci");
  static const std::set<std::string> kinds = {"gaussian", "levy",      "ghz", "ising",    "random_mps",
                                              "lorenz",   "synthetic", "csv", "mps_file", "dense_file"};
  if (!kinds.count(source.kind)) throw std::invalid_argument("unknown source kind '" + source.kind + "'");
  if ((source.kind == "csv" || source.kind == "mps_file" || source.kind == "dense_file") && source.path.empty())
    throw std::invalid_argument("source.path is required for " + source.kind);
  if (heuristic == Heuristic::Bmpd) bmpd.validate();
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  RunConfig c;
  Keys top(j, "config");
  if (!top.get("version", c.version)) throw std::invalid_argument("config: version is required");
  top.get("run_id", c.run_id);  // default set below from source and methods
  std::uint64_t seed = 0;
  if (top.get("seed", seed)) c.seed = seed;

  if (const json* s = top.object("source")) {
    Keys k(*s, "source");
    SourceConfig& src = c.source;
    k.get("kind", src.kind);
    k.get("n_qubits", src.n_qubits);
    k.get("mu", src.mu);
    k.get("sigma", src.sigma);
    k.get("levy_c", src.levy_c);
    k.get("h_x", src.h_x);
    k.get("chi", src.chi);
    k.get("k", src.k);
    k.get("m", src.m);
    k.get("t_final", src.t_final);
    k.get("dt", src.dt);
    k.get("path", src.path);
    k.get("method", src.method);
    k.get("eps_svd", src.eps_svd);
    k.get("chi_max", src.chi_max);
    k.finish();
  }
  if (const json* r = top.object("reorder")) {
    Keys k(*r, "reorder");
    k.get("enabled", c.reorder.enabled);
    k.get("eta", c.reorder.eta);
    k.get("restarts", c.reorder.restarts);
    k.get("anneal", c.reorder.anneal);
    k.finish();
  }
  if (const json* h = top.object("heuristic")) {
    Keys k(*h, "heuristic");
    std::string kind = heuristic_name(c.heuristic);
    k.get("kind", kind);
    c.heuristic = heuristic_from_name(kind);
    k.get("layers", c.layers);
    double eps = c.smpd.eps_svd;
    if (k.get("eps_svd", eps)) c.smpd.eps_svd = c.bmpd.eps_svd = eps;
    std::string gauge = smpd_gauge_name(c.smpd.gauge);
    k.get("gauge", gauge);
    c.smpd.gauge = smpd_gauge_from_name(gauge);
    k.get("center", c.smpd.center);
    k.get("skip_disentangled_bonds", c.smpd.skip_disentangled_bonds);
    k.get("decompose_isometries", c.smpd.decompose_isometries);
    double stop = 0.0;
    if (k.get("stop_fidelity", stop)) c.smpd.stop_fidelity = stop;
    k.get("alpha", c.bmpd.alpha);
    double skip = 0.0;
    if (k.get("entropy_skip_threshold", skip)) c.bmpd.entropy_skip_threshold = skip;
    k.get("max_iterations", c.bmpd.max_iterations);
    k.get("gradient_tolerance", c.bmpd.gradient_tolerance);
    k.get("restarts", c.bmpd.restarts);
    k.finish();
  }
  bool sweeps_set = false, iters_set = false;
  if (const json* o = top.object("optimizer")) {
    Keys k(*o, "optimizer");
    std::string kind = optimizer_name(c.optimizer);
    k.get("kind", kind);
    c.optimizer = optimizer_from_name(kind);
    std::string mode = mode_name(c.mode);
    k.get("mode", mode);
    c.mode = mode_from_name(mode);
    k.get("beta", c.ev.beta);
    sweeps_set = k.get("sweeps", c.ev.n_sweeps);
    k.get("lr", c.adam.lr);
    iters_set = k.get("iterations", c.adam.n_iter);
    double eps = c.ev.eps_svd;
    if (k.get("eps_svd", eps)) c.ev.eps_svd = c.adam.eps_svd = eps;
    bool absorb = true;
    if (k.get("absorb", absorb)) c.ev.absorb = c.adam.absorb = absorb;
    k.finish();
  }
  if (!j.contains("run_id"))
    c.run_id = c.source.kind + ":" + heuristic_name(c.heuristic) + "-" + optimizer_name(c.optimizer);
  if (!sweeps_set) c.ev.n_sweeps = c.mode == OptimizeMode::PostHoc ? 1000 : 100;
  if (!iters_set) c.adam.n_iter = c.mode == OptimizeMode::PostHoc ? 10000 : 1000;
  if (const json* s = top.object("simulation")) {
    Keys k(*s, "simulation");
    k.get("chi_tilde", c.chi_tilde);
    k.get("chi_verify", c.chi_verify);
    k.get("eps_svd", c.sim_eps_svd);
    k.get("verify_threshold", c.verify_threshold);
    k.finish();
  }
  if (const json* o = top.object("output")) {
    Keys k(*o, "output");
    k.get("dir", c.out_dir);
    k.get("timing", c.timing);
    k.finish();
  }
  top.finish();
  c.validate();
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["version"] = c.version;
  j["run_id"] = c.run_id;
  if (c.seed) j["seed"] = *c.seed;
  const SourceConfig& s = c.source;
  j["source"] = {{"kind", s.kind},       {"n_qubits", s.n_qubits}, {"mu", s.mu},         {"sigma", s.sigma},
                 {"levy_c", s.levy_c},   {"h_x", s.h_x},           {"chi", s.chi},       {"k", s.k},
                 {"m", s.m},             {"t_final", s.t_final},   {"dt", s.dt},         {"path", s.path},
                 {"method", s.method},   {"eps_svd", s.eps_svd},   {"chi_max", s.chi_max}};
  j["reorder"] = {{"enabled", c.reorder.enabled},
                  {"eta", c.reorder.eta},
                  {"restarts", c.reorder.restarts},
                  {"anneal", c.reorder.anneal}};
  json h = {{"kind", heuristic_name(c.heuristic)},
            {"layers", c.layers},
            {"eps_svd", c.heuristic == Heuristic::Smpd ? c.smpd.eps_svd : c.bmpd.eps_svd},
            {"gauge", smpd_gauge_name(c.smpd.gauge)},
            {"center", c.smpd.center},
            {"skip_disentangled_bonds", c.smpd.skip_disentangled_bonds},
            {"decompose_isometries", c.smpd.decompose_isometries},
            {"alpha", c.bmpd.alpha},
            {"max_iterations", c.bmpd.max_iterations},
            {"gradient_tolerance", c.bmpd.gradient_tolerance},
            {"restarts", c.bmpd.restarts}};
  if (c.smpd.stop_fidelity) h["stop_fidelity"] = *c.smpd.stop_fidelity;
  if (c.bmpd.entropy_skip_threshold) h["entropy_skip_threshold"] = *c.bmpd.entropy_skip_threshold;
  j["heuristic"] = h;
  j["optimizer"] = {{"kind", optimizer_name(c.optimizer)}, {"mode", mode_name(c.mode)},
                    {"beta", c.ev.beta},                   {"sweeps", c.ev.n_sweeps},
                    {"lr", c.adam.lr},                     {"iterations", c.adam.n_iter},
                    {"eps_svd", c.ev.eps_svd},             {"absorb", c.ev.absorb}};
  j["simulation"] = {{"chi_tilde", c.chi_tilde},
                     {"chi_verify", c.chi_verify},
                     {"eps_svd", c.sim_eps_svd},
                     {"verify_threshold", c.verify_threshold}};
  j["output"] = {{"dir", c.out_dir}, {"timing", c.timing}};
  return j.dump(2);
}

RunConfig read_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return run_config_from_json(ss.str());
}

// Metrics CSV -------------------------------------------------------------------

namespace {
constexpr const char* kHeader =
    "run_id,stage,layer,sweep_or_iter,infidelity,n_cnot,d_cnot,max_entropy,discarded_weight,norm_error,chi_tilde,"
    "wall_time_s";
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::string out = std::string(kHeader) + "\n";
  for (const MetricsRow& r : rows) {
    out += r.run_id + "," + r.stage + "," + std::to_string(r.layer) + "," + std::to_string(r.sweep_or_iter) + "," +
           fmt_double(r.infidelity) + "," + std::to_string(r.n_cnot) + "," + std::to_string(r.d_cnot) + "," +
           fmt_double(r.max_entropy) + "," + fmt_double(r.discarded_weight) + "," + fmt_double(r.norm_error) + "," +
           std::to_string(r.chi_tilde) + "," + fmt_double(r.wall_time_s) + "\n";
  }
  return out;
}

std::vector<MetricsRow> metrics_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw std::invalid_argument("metrics CSV: unexpected header");
  std::vector<MetricsRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 12) throw std::invalid_argument("metrics CSV line " + std::to_string(lineno) + ": expected 12 fields");
    try {
      MetricsRow r;
      r.run_id = f[0];
      r.stage = f[1];
      r.layer = std::stoi(f[2]);
      r.sweep_or_iter = std::stoi(f[3]);
      r.infidelity = std::stod(f[4]);
      r.n_cnot = std::stoi(f[5]);
      r.d_cnot = std::stoi(f[6]);
      r.max_entropy = std::stod(f[7]);
      r.discarded_weight = std::stod(f[8]);
      r.norm_error = std::stod(f[9]);
      r.chi_tilde = std::stoi(f[10]);
      r.wall_time_s = std::stod(f[11]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw std::invalid_argument("metrics CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return rows;
}

// Stages --------------------------------------------------------------------------

Mps load_source(const SourceConfig& src, std::optional<std::uint64_t> seed, double* loss) {
  if (loss) *loss = 0.0;
  auto need_seed = [&]() {
    if (!seed) throw std::invalid_argument("source '" + src.kind + "' needs a seed");
    return *seed;
  };
  auto from_dense = [&](const VecC& v) {
    Mps m = dense_to_mps(v, src.eps_svd, src.chi_max).mps;
    if (loss) *loss = dense_loss(v, m);
    return normalized(m);
  };
  auto from_grid = [&](const QuanticsGrid& g) {
    if (src.method == "dense") return from_dense(g.dense());
    TciOptions opt;
    opt.seed = need_seed();
    if (src.chi_max != kUnbounded) opt.chi_max = src.chi_max;
    Mps m = tci_build(g, opt).mps;
    if (loss && src.n_qubits <= kMaxDenseQubits) *loss = dense_loss(g.dense(), m);
    return normalized(m);
  };
  const std::string& k = src.kind;
  if (k == "gaussian") return from_grid(gaussian_amplitudes(src.n_qubits, src.mu, src.sigma));
  if (k == "levy") return from_grid(levy_amplitudes(src.n_qubits, src.levy_c));
  if (k == "ghz") return normalized(ghz_state(src.n_qubits));
  if (k == "ising") return normalized(ising_groundstate_exact(src.n_qubits, src.h_x));
  if (k == "random_mps") {
    Rng rng(need_seed());
    return normalized(random_mps(src.n_qubits, src.chi, rng));
  }
  if (k == "lorenz") {
    LorenzParams p;
    p.t_final = src.t_final;
    p.dt = src.dt;
    return from_dense(lorenz_series(p));
  }
  if (k == "synthetic") {
    Rng rng(need_seed());
    return from_dense(stack_series(synthetic_company_corpus(src.k, src.m, rng).series, src.k, src.m));
  }
  if (k == "csv") return from_dense(csv_stacked_amplitudes(src.path, src.k, src.m));
  if (k == "mps_file") return normalized(read_mps(src.path));
  if (k == "dense_file") return from_dense(read_dense(src.path));
  throw std::invalid_argument("unknown source kind '" + k + "'");
}

CnotMetrics lowered_cnot_metrics(const Circuit& c) { return cnot_metrics(lower_generic_gates(c)); }

double residual_max_entropy(const Circuit& c, const Mps& target, int chi_max) {
  Mps r = simulate(inverse(c), chi_max, 1e-14, target).state;
  return max_or_zero(bond_entropy_profile(r, Entropy::von_neumann()));
}

RunMetrics run_pipeline(const RunConfig& cfg_in) {
  cfg_in.validate();
  RunConfig cfg = cfg_in;
  const auto t0 = std::chrono::steady_clock::now();
  auto wall = [&]() {
    return cfg.timing ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() : 0.0;
  };
  const int chi = cfg.chi_tilde;
  const int chi_v = cfg.chi_verify > 0 ? cfg.chi_verify : 4 * chi;
  cfg.smpd.chi_tilde = cfg.bmpd.chi_tilde = chi;
  cfg.ev.chi_max = cfg.adam.chi_max = chi;
  cfg.smpd.max_layers = cfg.bmpd.max_layers = cfg.layers;
  if (cfg.seed) cfg.bmpd.seed = *cfg.seed;

  RunMetrics out;
  std::string stage = "load";
  json trace = {{"version", 1}, {"run_id", cfg.run_id}, {"config", json::parse(run_config_to_json(cfg_in))}};
  json opt_history = json::array();

  auto row = [&](const std::string& st, int layer, int step, double inf) {
    MetricsRow r;
    r.run_id = cfg.run_id;
    r.stage = st;
    r.layer = layer;
    r.sweep_or_iter = step;
    r.infidelity = std::max(0.0, inf);
    r.max_entropy = kNaN;
    r.chi_tilde = chi;
    r.wall_time_s = wall();
    out.rows.push_back(r);
    return &out.rows.back();
  };
  auto set_counts = [](MetricsRow* r, const Circuit& c) {
    CnotMetrics m = lowered_cnot_metrics(c);
    r->n_cnot = m.n_cnot;
    r->d_cnot = m.d_cnot;
  };

  auto write_artifacts = [&](const std::string& status, const std::string& error) {
    if (cfg.out_dir.empty()) return;
    std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    write_text(dir / "metrics.csv", metrics_to_csv(out.rows));
    if (!out.circuit.gates.empty() || status == "ok") write_circuit((dir / "circuit.json").string(), out.circuit);
    if (out.plan) write_plan((dir / "plan.json").string(), *out.plan);
    trace["status"] = status;
    trace["optimizer_history"] = opt_history;
    trace["warnings"] = out.warnings;
    write_text(dir / "trace.json", trace.dump(2) + "\n");
    json st = {{"status", status}, {"run_id", cfg.run_id}};
    if (!error.empty()) {
      st["stage"] = stage;
      st["error"] = error;
    }
    write_text(dir / "status.json", st.dump(2) + "\n");
  };

  try {
    double loss = 0.0;
    out.target = load_source(cfg.source, cfg.seed, &loss);
    {
      MetricsRow* r = row("load", 0, 0, loss);
      r->max_entropy = max_or_zero(bond_entropy_profile(out.target, Entropy::von_neumann()));
    }

    if (cfg.reorder.enabled) {
      stage = "reorder";
      ReorderOptions ro;
      ro.eta = cfg.reorder.eta;
      ro.restarts = cfg.reorder.restarts;
      ro.anneal = cfg.reorder.anneal;
      ro.seed = *cfg.seed;
      PermutationPlan plan = optimize_permutation(qmi_matrix(out.target), ro);
      MpsResult moved = apply_permutation(out.target, plan, kUnbounded, 1e-14);
      record_entropies(plan, out.target, moved.mps);
      if (!plan.warning.empty()) out.warnings.push_back("reorder: " + plan.warning);
      out.target = normalized(moved.mps);
      out.plan = plan;
      MetricsRow* r = row("reorder", 0, 0, moved.discarded_weight);
      r->discarded_weight = moved.discarded_weight;
      r->max_entropy = plan.entropy_after_max;
      trace["reorder"] = json::parse(plan_to_json(plan));
    }

    const Mps& target = out.target;
    if (cfg.optimizer == OptimizerKind::None || cfg.mode == OptimizeMode::PostHoc) {
      stage = "heuristic";
      std::vector<std::pair<double, double>> per_layer;  // infidelity, discarded weight
      if (cfg.heuristic == Heuristic::Smpd) {
        SmpdResult r = smpd_build(target, cfg.smpd);
        out.circuit = std::move(r.circuit);
        for (const auto& st : r.trace) per_layer.emplace_back(st.infidelity, st.discarded_weight);
        trace["heuristic"] = json::parse(smpd_trace_to_json(r.trace));
      } else {
        BmpdResult r = bmpd_build(target, cfg.bmpd);
        out.circuit = std::move(r.circuit);
        for (const auto& st : r.trace) per_layer.emplace_back(st.infidelity, st.discarded_weight);
        for (const auto& w : r.warnings) out.warnings.push_back("bmpd: " + w);
        trace["heuristic"] = json::parse(bmpd_trace_to_json(r));
      }
      const int n_layers = static_cast<int>(per_layer.size());
      for (int l = 0; l < n_layers; ++l) {
        Circuit part = l + 1 == n_layers ? out.circuit : layers_up_to(out.circuit, l);
        MetricsRow* r = row("heuristic", l + 1, 0, per_layer[static_cast<size_t>(l)].first);
        r->discarded_weight = per_layer[static_cast<size_t>(l)].second;
        set_counts(r, part);
        r->max_entropy = residual_max_entropy(part, target, chi);
      }
      if (cfg.optimizer != OptimizerKind::None) {
        stage = "optimize";
        OptimizeResult o = cfg.optimizer == OptimizerKind::Ev ? ev_sweep(out.circuit, target, cfg.ev)
                                                              : riemannian_adam(out.circuit, target, cfg.adam);
        out.circuit = std::move(o.circuit);
        if (!o.warning.empty()) out.warnings.push_back("optimize: " + o.warning);
        CnotMetrics cm = lowered_cnot_metrics(out.circuit);
        for (const HistoryEntry& h : o.history) {
          MetricsRow* r = row("optimize", n_layers, h.step, h.infidelity);
          r->n_cnot = cm.n_cnot;
          r->d_cnot = cm.d_cnot;
          if (cfg.timing) r->wall_time_s = h.seconds;
          opt_history.push_back({{"step", h.step}, {"infidelity", h.infidelity}});
        }
        out.rows.back().max_entropy = residual_max_entropy(out.circuit, target, chi);
      }
    } else {
      stage = "interleaved";
      InterleavedOptions io;
      io.heuristic = cfg.heuristic;
      io.optimizer = cfg.optimizer;
      io.layers = cfg.layers;
      io.smpd = cfg.smpd;
      io.bmpd = cfg.bmpd;
      io.ev = cfg.ev;
      io.adam = cfg.adam;
      io.chi_max = chi;
      InterleavedResult ir = interleaved_pipeline(target, io);
      out.circuit = std::move(ir.circuit);
      std::map<int, CnotMetrics> counts;
      for (const InterleavedRow& tr : ir.trace) {
        if (!counts.count(tr.layer)) counts[tr.layer] = lowered_cnot_metrics(layers_up_to(out.circuit, tr.layer));
        MetricsRow* r = row(tr.stage == "heuristic" ? "heuristic" : "optimize", tr.layer + 1, tr.step, tr.infidelity);
        r->n_cnot = counts[tr.layer].n_cnot;
        r->d_cnot = counts[tr.layer].d_cnot;
        if (cfg.timing) r->wall_time_s = tr.seconds;
        opt_history.push_back({{"layer", tr.layer + 1}, {"stage", tr.stage}, {"step", tr.step}, {"infidelity", tr.infidelity}});
      }
    }

    stage = "simulate";
    CnotMetrics fm = lowered_cnot_metrics(out.circuit);
    auto sim_row = [&](const std::string& st, int c) {
      SimResult s = simulate(out.circuit, c, cfg.sim_eps_svd);
      double inf = 1.0 - fidelity(s.state, target);
      MetricsRow* r = row(st, cfg.layers, 0, inf);
      r->n_cnot = fm.n_cnot;
      r->d_cnot = fm.d_cnot;
      r->discarded_weight = s.discarded_weight;
      r->norm_error = s.norm_error;
      r->chi_tilde = c;
      r->max_entropy = residual_max_entropy(out.circuit, target, c);
      return r->infidelity;
    };
    out.infidelity = sim_row("simulate", chi);
    stage = "verify";
    out.infidelity_verify = sim_row("verify", chi_v);
    const double gap = std::abs(out.infidelity - out.infidelity_verify);
    out.verify_flag = gap > cfg.verify_threshold;
    if (out.verify_flag)
      out.warnings.push_back("verify: infidelity differs by " + fmt_double(gap) + " between chi " +
                             std::to_string(chi) + " and " + std::to_string(chi_v));
    trace["verification"] = {{"chi_tilde", chi},
                             {"chi_verify", chi_v},
                             {"infidelity", out.infidelity},
                             {"infidelity_verify", out.infidelity_verify},
                             {"gap", gap},
                             {"flagged", out.verify_flag}};
    trace["cnot"] = {{"n_cnot", fm.n_cnot}, {"d_cnot", fm.d_cnot}};
    stage = "write";
    write_artifacts("ok", "");
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    const std::string failed = stage;
    try {
      write_artifacts("failed", e.what());
    } catch (const std::exception&) {
      // Keep the original failure.
    }
    throw PipelineError(failed, e.what());
  }
  return out;
}

// Report ------------------------------------------------------------------------------

Report build_report(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("report: no metrics rows");
  std::vector<std::string> order;
  std::map<std::string, std::vector<const MetricsRow*>> by_run;
  for (const MetricsRow& r : rows) {
    if (!by_run.count(r.run_id)) order.push_back(r.run_id);
    by_run[r.run_id].push_back(&r);
  }
  Report rep;
  for (const std::string& id : order) {
    const auto& rs = by_run[id];
    const MetricsRow* pick = rs.back();
    for (const char* pref : {"simulate", "verify"})
      for (const MetricsRow* r : rs)
        if (r->stage == pref) pick = r;
    ReportEntry e;
    e.run_id = id;
    e.target = id.substr(0, id.find(':'));
    e.infidelity = pick->infidelity;
    e.n_cnot = pick->n_cnot;
    e.d_cnot = pick->d_cnot;
    rep.entries.push_back(e);
  }
  auto dominated = [](double inf_a, int cost_a, double inf_b, int cost_b) {
    // b dominates a
    return inf_b <= inf_a && cost_b <= cost_a && (inf_b < inf_a || cost_b < cost_a);
  };
  for (ReportEntry& a : rep.entries) {
    a.pareto_n_cnot = a.pareto_d_cnot = true;
    for (const ReportEntry& b : rep.entries) {
      if (b.target != a.target) continue;
      if (dominated(a.infidelity, a.n_cnot, b.infidelity, b.n_cnot)) a.pareto_n_cnot = false;
      if (dominated(a.infidelity, a.d_cnot, b.infidelity, b.d_cnot)) a.pareto_d_cnot = false;
    }
  }

  rep.csv = "target,run_id,infidelity,n_cnot,d_cnot,pareto_n_cnot,pareto_d_cnot\n";
  for (const ReportEntry& e : rep.entries)
    rep.csv += e.target + "," + e.run_id + "," + fmt_double(e.infidelity) + "," + std::to_string(e.n_cnot) + "," +
               std::to_string(e.d_cnot) + "," + (e.pareto_n_cnot ? "1" : "0") + "," + (e.pareto_d_cnot ? "1" : "0") +
               "\n";

  std::ostringstream md;
  md << "# Run summary\n";
  std::vector<std::string> targets;
  for (const ReportEntry& e : rep.entries)
    if (std::find(targets.begin(), targets.end(), e.target) == targets.end()) targets.push_back(e.target);
  for (const std::string& t : targets) {
    md << "\n## " << t << "\n\n";
    md << "| run | infidelity | n_cnot | d_cnot | n_cnot frontier | d_cnot frontier |\n";
    md << "|---|---|---|---|---|---|\n";
    const ReportEntry *best_inf = nullptr, *best_n = nullptr, *best_d = nullptr;
    for (const ReportEntry& e : rep.entries) {
      if (e.target != t) continue;
      char inf[32];
      std::snprintf(inf, sizeof inf, "%.3e", e.infidelity);
      md << "| " << e.run_id << " | " << inf << " | " << e.n_cnot << " | " << e.d_cnot << " | "
         << (e.pareto_n_cnot ? "yes" : "") << " | " << (e.pareto_d_cnot ? "yes" : "") << " |\n";
      if (!best_inf || e.infidelity < best_inf->infidelity) best_inf = &e;
      if (!best_n || e.n_cnot < best_n->n_cnot) best_n = &e;
      if (!best_d || e.d_cnot < best_d->d_cnot) best_d = &e;
    }
    md << "\nLowest infidelity: " << best_inf->run_id << ". Fewest CNOTs: " << best_n->run_id
       << ". Shallowest CNOT depth: " << best_d->run_id << ".\n";
  }
  rep.markdown = md.str();
  return rep;
}

}  // namespace mpsprep
