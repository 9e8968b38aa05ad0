#pragma once

// The `fraclab` command line. Every successful run writes its outputs plus a
// manifest `<primary output>.manifest.json` from which `fraclab repro`
// replays the run and checks the output digests.

#include <fraclab/energy.hpp>
#include <fraclab/error.hpp>
#include <fraclab/io.hpp>
#include <fraclab/kernels.hpp>
#include <fraclab/parallel.hpp>
#include <fraclab/prefractal.hpp>
#include <fraclab/sc_construct.hpp>
#include <fraclab/sg_construct.hpp>
#include <fraclab/spectral.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fraclab::cli {

inline constexpr const char* kVersion = "1.0.0";

struct Output {
  std::string path;
  std::string sha256;
  std::size_t bytes = 0;
};

/// State of one invocation: what it wrote and how it was configured.
struct Run {
  std::vector<std::string> argv;
  io::Json config = io::Json::object();
  std::string arithmetic = "float64";
  std::vector<Output> outputs;

  void write(const std::string& path, const std::string& content) {
    io::write_file(path, content);
    outputs.push_back({path, io::sha256_hex(content), content.size()});
  }
};

namespace detail {

inline double parse_diam(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return d;
  } catch (const std::logic_error&) {
    throw ArgumentError("--diam expects a number or inf, got '" + s + "'");
  }
}

/// Uniform values in [-1, 1) from a 64-bit Mersenne twister; the mapping
/// from raw bits is explicit so the stream is the same on every platform.
inline std::vector<double> random_values(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
  return v;
}

inline std::optional<std::uint64_t> random_seed(const std::string& spec) {
  const std::string prefix = "builtin:random:";
  if (spec.rfind(prefix, 0) != 0) return std::nullopt;
  try {
    return std::stoull(spec.substr(prefix.size()));
  } catch (const std::logic_error&) {
    throw ArgumentError("bad random seed in '" + spec + "'");
  }
}

/// Level -> values on the level-n graphs named by a function spec.
inline std::map<int, std::vector<double>> load_function(const std::string& spec, const PrefractalGraph& g) {
  std::map<int, std::vector<double>> out;
  if (auto seed = random_seed(spec)) {
    out[g.level] = random_values(*seed, g.vertex_count());
    return out;
  }
  if (spec == "builtin:f" || spec == "builtin:u2") {
    if (g.kind != Kind::SC) throw UnsupportedKindError(spec + " is defined on the carpet only");
    for (int n = 1; n <= g.level; ++n) {
      const auto gn = build_graph(Kind::SC, n);
      out[n] = (spec == "builtin:f" ? sc::f_function(gn) : sc::u2_function(gn)).values;
    }
    return out;
  }
  if (spec.rfind("builtin:", 0) == 0) throw ArgumentError("unknown builtin function '" + spec + "'");
  auto file = io::function_from_json(io::read_json(spec), g.level);
  if (file.kind && *file.kind != g.kind) throw ArgumentError("function file kind does not match the graph");
  for (const auto& [n, v] : file.levels)
    if (n < 0 || n > g.level)
      throw ArgumentError("function level " + std::to_string(n) + " is outside 0.." + std::to_string(g.level));
  return file.levels;
}

inline std::map<int, std::vector<Rational>> load_function_exact(const std::string& spec, const PrefractalGraph& g) {
  std::map<int, std::vector<Rational>> out;
  if (spec == "builtin:f" || spec == "builtin:u2") {
    if (g.kind != Kind::SC) throw UnsupportedKindError(spec + " is defined on the carpet only");
    for (int n = 1; n <= g.level; ++n) {
      const auto gn = build_graph(Kind::SC, n);
      out[n] = (spec == "builtin:f" ? sc::f_function_exact(gn) : sc::u2_function_exact(gn)).values;
    }
    return out;
  }
  for (const auto& [n, v] : load_function(spec, g)) {
    auto& dst = out[n];
    for (double x : v) dst.push_back(exact_rational(x));
  }
  return out;
}

inline std::string potentials_csv(const PrefractalGraph& g, const VertexFunction<double>& u) {
  std::string s = "vertex,x,y,value\n";
  for (std::size_t i = 0; i < g.vertex_count(); ++i) {
    const auto p = g.vertex(i);
    s += std::to_string(i) + "," + io::format_double(p.xd()) + "," + io::format_double(p.yd()) + "," +
         io::format_double(u.values[i]) + "\n";
  }
  return s;
}

inline void snapshot_config(const CLI::App& sub, io::Json& config) {
  config["command"] = sub.get_name();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    const auto& res = opt->results();
    if (!res.empty())
      config[name] = res.size() == 1 ? io::Json(res[0]) : io::Json(res);
    else if (!opt->get_default_str().empty())
      config[name] = opt->get_default_str();
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands

inline void cmd_graph(Run& run, const std::string& kind, int level, const std::string& out) {
  const auto g = build_graph(parse_kind(kind), level);
  run.write(out, io::dump(io::graph_to_json(g)));
}

struct EnergyArgs {
  std::string graph, function, out = "report.csv", plotdata, arithmetic = "float";
  double rho = EnergyConfig::kDefaultRho;
  std::vector<double> betas;
};

inline void cmd_energy(Run& run, const EnergyArgs& a) {
  const auto g = io::graph_from_json(io::read_json(a.graph));
  const auto cfg = EnergyConfig::for_kind(g.kind, a.rho);
  std::vector<int> levels;
  std::vector<double> raw;
  if (a.arithmetic == "rational") {
    run.arithmetic = "rational";
    for (const auto& [n, v] : detail::load_function_exact(a.function, g)) {
      const auto gn = build_graph(g.kind, n);
      levels.push_back(n);
      raw.push_back(to_double(raw_energy(gn, VertexFunction<Rational>(gn, v))));
    }
  } else if (a.arithmetic == "float") {
    for (const auto& [n, v] : detail::load_function(a.function, g)) {
      const auto gn = build_graph(g.kind, n);
      levels.push_back(n);
      raw.push_back(raw_energy(gn, VertexFunction<double>(gn, v)));
    }
  } else {
    throw ArgumentError("--arithmetic must be float or rational");
  }
  const auto rep = make_report(levels, raw, cfg, a.betas.empty() ? cfg.default_betas() : a.betas);
  const auto table = io::energy_table(rep);
  run.write(a.out, table.to_csv());
  if (!a.plotdata.empty()) run.write(a.plotdata, io::emit_plotdata(table));
}

inline void cmd_sg_witness(Run& run, int levels, const std::string& out, const std::string& report,
                           const std::string& plotdata) {
  const auto w = sg::build_witness(levels);
  io::Json j;
  j["kind"] = "sg";
  io::Json lv = io::Json::object();
  for (int i = 0; i < w.depth(); ++i) {
    // Keys are distinct by construction; building the map from a range skips
    // the per-insert lookup of ordered_json.
    const auto& v = w.levels[static_cast<std::size_t>(i)].values;
    std::vector<std::pair<const std::string, io::Json>> entries;
    entries.reserve(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) entries.emplace_back(std::to_string(k), v[k]);
    lv[std::to_string(i + 1)] = io::Json::object_t(entries.begin(), entries.end());
  }
  j["levels"] = std::move(lv);
  j["alphas"] = w.alphas;
  run.write(out, io::dump(j));

  std::vector<int> ns;
  for (int n = 1; n <= w.depth(); ++n) ns.push_back(n);
  const auto cfg = EnergyConfig::sg();
  const auto table = io::energy_table(make_report(ns, w.raw_energies(), cfg, cfg.default_betas()));
  run.write(report, table.to_csv());
  if (!plotdata.empty()) run.write(plotdata, io::emit_plotdata(table, {"weighted_a"}));
}

inline void cmd_sc_resistance(Run& run, int levels, const std::string& out, const std::string& potentials) {
  const auto est = sc::estimate_rho(levels);
  io::Json j;
  j["levels"] = levels;
  j["resistances"] = est.resistances;
  j["ratios"] = est.ratios;
  io::Json in_interval = io::Json::array();
  for (double r : est.ratios) in_interval.push_back(r >= EnergyConfig::kRhoMin && r <= EnergyConfig::kRhoMax);
  j["ratios_in_interval"] = std::move(in_interval);
  j["interval"] = {EnergyConfig::kRhoMin, EnergyConfig::kRhoMax};
  j["rho_extrapolated"] = est.extrapolated;
  j["rho_uncertainty"] = est.uncertainty;
  j["reference"] = {sc::kReferenceRhoLo, sc::kReferenceRhoHi};
  j["overlaps_reference"] = est.overlaps_reference;
  run.write(out, io::dump(j));
  if (!potentials.empty()) {
    const auto prob = sc::solve_resistance(levels);
    run.write(potentials, detail::potentials_csv(prob.graph, prob.potential));
  }
}

inline constexpr int kGlueStepCap = 2;

inline void cmd_sc_glue(Run& run, int steps, std::optional<double> C, int cap, double rho, const std::string& out,
                        const std::string& potentials) {
  if (steps > kGlueStepCap)
    throw CapError("glue steps " + std::to_string(steps) + " exceeds the cap of " + std::to_string(kGlueStepCap),
                   kGlueStepCap);
  EnergyConfig::sc(rho);
  const auto s = sc::run_glue(steps, cap, rho, C);
  const auto v = sc::verify(s);
  io::Json j;
  j["steps"] = s.step;
  j["cap"] = s.cap();
  j["rho"] = s.rho;
  j["C"] = s.C;
  j["C_hat"] = s.C1;
  j["thresholds"] = s.thresholds;
  j["delta1"] = s.delta1s;
  j["delta2"] = s.delta2s;
  io::Json recs = io::Json::array();
  for (const auto& r : s.records)
    recs.push_back({{"k", r.k},
                    {"n_k", r.n_k},
                    {"rule", r.rule},
                    {"target", r.target},
                    {"other_energy", r.other_energy},
                    {"delta1", r.delta1},
                    {"delta2", r.delta2},
                    {"delta2_halvings", r.delta2_halvings},
                    {"restricted_energy", r.restricted_energy},
                    {"sup_delta", r.sup_delta}});
  j["records"] = std::move(recs);
  io::Json ver;
  ver["levels"] = v.levels;
  ver["energy"] = v.materialized;
  ver["ledger"] = v.ledger;
  ver["bound"] = v.bound;
  ver["restricted"] = v.restricted;
  ver["restricted_target"] = v.restricted_target;
  ver["max_mismatch"] = v.max_mismatch;
  ver["max_ledger_gap"] = v.max_ledger_gap;
  ver["upper_ok"] = v.upper_ok;
  ver["lower_ok"] = v.lower_ok;
  j["verification"] = std::move(ver);
  run.write(out, io::dump(j));
  if (!potentials.empty()) {
    const auto u = sc::materialize(s, s.cap());
    run.write(potentials, detail::potentials_csv(s.templates->graphs[static_cast<std::size_t>(s.cap())], u));
  }
}

struct SubordinateArgs {
  std::string graph, u, method = "both", out = "result.json";
  double delta = 0.5;
  bool jump = false;
};

inline void cmd_subordinate(Run& run, const SubordinateArgs& a) {
  if (a.method != "spectral" && a.method != "quadrature" && a.method != "both")
    throw ArgumentError("--method must be spectral, quadrature or both");
  const auto g = io::graph_from_json(io::read_json(a.graph));
  const auto levels = detail::load_function(a.u, g);
  auto it = levels.find(g.level);
  if (it == levels.end()) throw ArgumentError("function has no values at the graph level");
  const Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(it->second.data(), static_cast<Eigen::Index>(it->second.size()));
  const auto spec = spectral::decompose(spectral::graph_laplacian(g));
  const auto mu = spectral::spectral_measure(spec, u);
  spectral::SubordinationParams p;
  p.delta = a.delta;
  p.validate();

  io::Json j;
  j["kind"] = to_string(g.kind);
  j["level"] = g.level;
  j["delta"] = a.delta;
  j["method"] = a.method;
  j["dirichlet_energy"] = spectral::dirichlet_energy(mu);
  std::optional<double> es, eq;
  if (a.method != "quadrature") j["spectral"] = *(es = spectral::subordinated_energy(mu, p));
  if (a.method != "spectral") j["quadrature"] = *(eq = spectral::subordinated_energy_quadrature(mu, p));
  if (es && eq) {
    j["difference"] = *eq - *es;
    j["relative_difference"] = std::abs(*eq - *es) / std::max(std::abs(*es), 1e-300);
  }
  if (a.jump) {
    const auto jk = spectral::jump_kernel(spec, p);
    j["jump_reconstruction"] = spectral::reconstruct_energy(jk, u);
    j["killing_max"] = jk.killing.cwiseAbs().maxCoeff();
  }
  run.write(a.out, io::dump(j));
}

inline void cmd_dyadic(Run& run, int K, double delta, const std::string& out) {
  if (K < 1) throw ArgumentError("--blocks must be at least 1");
  if (K > 1000) throw CapError("--blocks exceeds the cap of 1000", 1000);
  spectral::SubordinationParams p;
  p.delta = delta;
  p.validate();
  const auto blocks = spectral::standard_blocks(K);
  io::Json rows = io::Json::array();
  std::vector<spectral::DyadicBlock> prefix;
  for (const auto& b : blocks) {
    prefix.push_back(b);
    const auto mu = spectral::dyadic_counterexample(prefix);
    const int k = static_cast<int>(prefix.size());
    rows.push_back({{"blocks", k},
                    {"lambda", b.lambda},
                    {"energy", spectral::dirichlet_energy(mu)},
                    {"subordinated_energy", spectral::subordinated_energy(mu, p)},
                    {"subordinated_bound", spectral::dyadic_subordinated_bound(k, delta)}});
  }
  io::Json j;
  j["blocks"] = K;
  j["delta"] = delta;
  j["partial_sums"] = std::move(rows);
  run.write(out, io::dump(j));
}

struct KernelArgs {
  std::string profile = "stable", diam = "inf", out = "bounds.csv", plotdata;
  double alpha = std::log(8.0) / std::log(3.0), beta0 = 2.0969, delta = 0.5;
  double C1 = 1.0, C2 = 1.0, C3 = 1.0, C4 = 1.0, c = 1.0;
  std::vector<double> radii;
};

inline void cmd_kernel_bounds(Run& run, KernelArgs a) {
  kernels::KernelBoundParams p;
  p.profile = kernels::parse_profile(a.profile);
  p.alpha = a.alpha;
  p.beta0 = a.beta0;
  p.delta = a.delta;
  p.C1 = a.C1;
  p.C2 = a.C2;
  p.C3 = a.C3;
  p.C4 = a.C4;
  p.c = a.c;
  p.diam = detail::parse_diam(a.diam);
  p.validate();
  if (a.radii.empty()) throw ArgumentError("--radii needs at least one radius");
  std::sort(a.radii.begin(), a.radii.end());
  io::Table t;
  t.columns = {"r", "lower", "upper"};
  t.rows.resize(a.radii.size());
  std::vector<std::string> errors(a.radii.size());
  parallel_for(a.radii.size(), [&](std::size_t i) {
    try {
      const auto b = kernels::j_delta_bounds(a.radii[i], p);
      t.rows[i] = {a.radii[i], b.lower, b.upper};
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw ArgumentError(e);
  run.write(a.out, t.to_csv());
  if (!a.plotdata.empty()) run.write(a.plotdata, io::emit_plotdata(t));
}

// ---------------------------------------------------------------------------
// Dispatch

inline std::string manifest_path(const Run& run) { return run.outputs.front().path + ".manifest.json"; }

inline int run(std::vector<std::string> argv, std::optional<int> threads = std::nullopt, bool write_manifest = true,
        Run* record = nullptr);

namespace detail {

inline void print_error(const std::string& kind, const std::string& message, std::optional<int> cap = std::nullopt) {
  io::Json j;
  j["error"] = kind;
  j["message"] = message;
  if (cap) j["cap"] = *cap;
  std::cerr << j.dump() << std::endl;
}

struct CwdGuard {
  std::filesystem::path saved = std::filesystem::current_path();
  ~CwdGuard() {
    std::error_code ec;
    std::filesystem::current_path(saved, ec);
  }
};

inline void cmd_repro(const std::string& manifest, std::optional<int> threads) {
  const auto m = io::read_json(manifest);
  std::vector<std::string> argv;
  std::vector<Output> expected;
  int recorded_threads = 1;
  std::string cwd;
  try {
    argv = m.at("argv").get<std::vector<std::string>>();
    recorded_threads = m.at("threads").get<int>();
    cwd = m.at("cwd").get<std::string>();
    for (const auto& o : m.at("outputs"))
      expected.push_back({o.at("path").get<std::string>(), o.at("sha256").get<std::string>(), o.at("bytes").get<std::size_t>()});
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + manifest + ": " + e.what());
  }
  if (!argv.empty() && argv.front() == "repro") throw ArgumentError("a manifest cannot replay repro");

  CwdGuard guard;
  std::error_code ec;
  std::filesystem::current_path(cwd, ec);
  if (ec) throw IoError("cannot enter recorded working directory " + cwd);

  Run replay;
  const int rc = run(argv, threads.value_or(recorded_threads), false, &replay);
  if (rc != 0) throw NumericError("replayed run exited with code " + std::to_string(rc));

  io::Json report;
  report["manifest"] = manifest;
  report["threads"] = threads.value_or(recorded_threads);
  io::Json outs = io::Json::array();
  bool ok = replay.outputs.size() == expected.size();
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const bool same = i < replay.outputs.size() && replay.outputs[i].path == expected[i].path &&
                      replay.outputs[i].sha256 == expected[i].sha256;
    ok = ok && same;
    outs.push_back({{"path", expected[i].path}, {"sha256", expected[i].sha256}, {"match", same}});
  }
  report["outputs"] = std::move(outs);
  report["match"] = ok;
  std::cout << report.dump() << std::endl;
  if (!ok) throw MismatchError("replayed outputs differ from the manifest digests");
}

}  // namespace detail

inline int run(std::vector<std::string> argv, std::optional<int> threads, bool write_manifest, Run* record) {
  CLI::App app{"Energies, witnesses and subordinated forms on Sierpinski gasket and carpet graphs", "fraclab"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  int flag_threads = 0;
  app.add_option("--threads", flag_threads, "Worker threads (overrides FRACLAB_THREADS)")->check(CLI::PositiveNumber);

  // graph
  std::string g_kind, g_out = "graph.json";
  int g_level = 0;
  auto* graph = app.add_subcommand("graph", "Build a level-N pre-fractal graph as JSON");
  graph->add_option("--kind", g_kind, "sg or sc")->required()->check(CLI::IsMember({"sg", "sc"}));
  graph->add_option("--level", g_level, "Graph level")->required();
  graph->add_option("--out", g_out, "Output JSON")->capture_default_str();

  // energy
  EnergyArgs e;
  auto* energy = app.add_subcommand("energy", "Energy report of a vertex function across levels");
  energy->add_option("--graph", e.graph, "Graph JSON (fixes kind and top level)")->required();
  energy->add_option("--function", e.function, "Function JSON, builtin:f, builtin:u2 or builtin:random:SEED")
      ->required();
  energy->add_option("--rho", e.rho, "Carpet resistance scaling factor")->capture_default_str();
  energy->add_option("--betas", e.betas, "Comma separated exponents (default beta* - 0.5 .. beta* + 0.05)")
      ->delimiter(',');
  energy->add_option("--arithmetic", e.arithmetic, "float or rational")->capture_default_str();
  energy->add_option("--out", e.out, "CSV: level,raw_E,weighted_a,besov_beta_<b>...")->capture_default_str();
  energy->add_option("--plotdata", e.plotdata, "Tidy CSV: level,quantity,value");

  // sg-witness
  int w_levels = 0;
  std::string w_out = "witness.json", w_report = "report.csv", w_plot;
  auto* witness = app.add_subcommand("sg-witness", "Gasket function with a_n(u) = n");
  witness->add_option("--levels", w_levels, "Top level N")->required();
  witness->add_option("--out", w_out, "Witness JSON")->capture_default_str();
  witness->add_option("--report", w_report, "Energy report CSV")->capture_default_str();
  witness->add_option("--plotdata", w_plot, "Tidy CSV of a_n: level,quantity,value");

  // sc-resistance
  int r_levels = 0;
  std::string r_out = "resistance.json", r_pot;
  auto* resistance = app.add_subcommand("sc-resistance", "Effective resistance between S and L on carpet graphs");
  resistance->add_option("--levels", r_levels, "Top level N")->required();
  resistance->add_option("--out", r_out, "Output JSON")->capture_default_str();
  resistance->add_option("--potentials", r_pot, "Top-level potential CSV: vertex,x,y,value");

  // sc-glue
  int gl_steps = 2, gl_cap = 6;
  std::optional<double> gl_C;
  double gl_rho = EnergyConfig::kDefaultRho;
  std::string gl_out = "glue.json", gl_pot;
  auto* glue = app.add_subcommand("sc-glue", "Carpet gluing construction");
  glue->add_option("--steps", gl_steps, "Gluing steps (at most 2)")->capture_default_str();
  glue->add_option("--C", gl_C, "Constant C (default C_hat + 1)");
  glue->add_option("--cap", gl_cap, "Top level")->capture_default_str();
  glue->add_option("--rho", gl_rho, "Resistance scaling factor")->capture_default_str();
  glue->add_option("--out", gl_out, "Output JSON")->capture_default_str();
  glue->add_option("--potentials", gl_pot, "Glued function at the top level: vertex,x,y,value");

  // subordinate
  SubordinateArgs s;
  auto* sub = app.add_subcommand("subordinate", "Subordinated energy of a function on a graph");
  sub->add_option("--graph", s.graph, "Graph JSON")->required();
  sub->add_option("--delta", s.delta, "Exponent in (0, 1)")->capture_default_str();
  sub->add_option("--u", s.u, "Function JSON or builtin:random:SEED")->required();
  sub->add_option("--method", s.method, "spectral, quadrature or both")->capture_default_str();
  sub->add_flag("--jump", s.jump, "Also reconstruct the energy from the jump kernel");
  sub->add_option("--out", s.out, "Output JSON")->capture_default_str();

  // dyadic
  int d_blocks = 30;
  double d_delta = 0.5;
  std::string d_out = "dyadic.json";
  auto* dyadic = app.add_subcommand("dyadic", "Partial sums of the dyadic spectral example");
  dyadic->add_option("--blocks", d_blocks, "Number of blocks K")->capture_default_str();
  dyadic->add_option("--delta", d_delta, "Exponent in (0, 1)")->capture_default_str();
  dyadic->add_option("--out", d_out, "Output JSON")->capture_default_str();

  // kernel-bounds
  KernelArgs k;
  auto* kb = app.add_subcommand("kernel-bounds", "Bounds on the subordinated jump kernel");
  kb->add_option("--profile", k.profile, "stable or subgaussian")->capture_default_str();
  kb->add_option("--alpha", k.alpha, "Volume exponent")->capture_default_str();
  kb->add_option("--beta0", k.beta0, "Walk exponent")->capture_default_str();
  kb->add_option("--delta", k.delta, "Exponent in (0, 1)")->capture_default_str();
  kb->add_option("--diam", k.diam, "Diameter or inf")->capture_default_str();
  kb->add_option("--radii", k.radii, "Comma separated radii")->delimiter(',')->required();
  kb->add_option("--C1", k.C1)->capture_default_str();
  kb->add_option("--C2", k.C2)->capture_default_str();
  kb->add_option("--C3", k.C3)->capture_default_str();
  kb->add_option("--C4", k.C4)->capture_default_str();
  kb->add_option("--c", k.c, "Sub-Gaussian exponent constant")->capture_default_str();
  kb->add_option("--out", k.out, "CSV: r,lower,upper (r ascending)")->capture_default_str();
  kb->add_option("--plotdata", k.plotdata, "Tidy CSV: r,quantity,value");

  // repro
  std::string manifest;
  auto* repro = app.add_subcommand("repro", "Replay a run from its manifest and compare output digests");
  repro->add_option("manifest", manifest, "Manifest JSON")->required();

  Run local;
  Run& out = record ? *record : local;
  out.argv = argv;
  const auto start = std::chrono::steady_clock::now();
  const int saved_threads = fraclab::detail::thread_override().load();
  struct ThreadRestore {
    int v;
    ~ThreadRestore() { set_thread_count(v); }
  } restore{saved_threads};

  try {
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    app.parse(reversed);
    if (threads) set_thread_count(*threads);
    else if (flag_threads > 0) set_thread_count(flag_threads);

    if (*repro) {
      detail::cmd_repro(manifest, flag_threads > 0 ? std::optional<int>(flag_threads) : threads);
      return 0;
    }
    CLI::App* chosen = app.get_subcommands().front();
    detail::snapshot_config(*chosen, out.config);

    if (*graph) cmd_graph(out, g_kind, g_level, g_out);
    else if (*energy) cmd_energy(out, e);
    else if (*witness) cmd_sg_witness(out, w_levels, w_out, w_report, w_plot);
    else if (*resistance) cmd_sc_resistance(out, r_levels, r_out, r_pot);
    else if (*glue) cmd_sc_glue(out, gl_steps, gl_C, gl_cap, gl_rho, gl_out, gl_pot);
    else if (*sub) cmd_subordinate(out, s);
    else if (*dyadic) cmd_dyadic(out, d_blocks, d_delta, d_out);
    else if (*kb) cmd_kernel_bounds(out, k);

    for (const auto& o : out.outputs) std::cout << o.path << "\n";
    if (write_manifest && !out.outputs.empty()) {
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      io::Json m;
      m["tool"] = "fraclab";
      m["version"] = kVersion;
      m["argv"] = out.argv;
      m["config"] = out.config;
      m["arithmetic"] = out.arithmetic;
      m["threads"] = thread_count();
      m["wall_time"] = wall;
      m["cwd"] = std::filesystem::current_path().string();
      io::Json outs = io::Json::array();
      for (const auto& o : out.outputs) outs.push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
      m["outputs"] = std::move(outs);
      const auto path = manifest_path(out);
      io::write_file(path, io::dump(m));
      std::cout << path << "\n";
    }
    return 0;
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    detail::print_error("UsageError", ex.what());
    return 2;
  } catch (const ArgumentError& ex) {
    detail::print_error(to_string(ex.kind()), ex.what());
    return 2;
  } catch (const CapError& ex) {
    detail::print_error(to_string(ex.kind()), ex.what(), ex.cap());
    return 3;
  } catch (const Error& ex) {
    detail::print_error(to_string(ex.kind()), ex.what());
    return 3;
  } catch (const std::exception& ex) {
    detail::print_error("InternalError", ex.what());
    return 3;
  }
}

}  // namespace fraclab::cli
