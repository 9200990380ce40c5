#include "dnlsnf/runner.hpp"

#include "dnlsnf/csv.hpp"
#include "dnlsnf/selftest.hpp"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>

namespace dnlsnf {

namespace fs = std::filesystem;
using json = nlohmann::json;

DnlsConfig dnls_config(const RunConfig& c) {
  DnlsConfig d;
  d.tangent = c.get_ints("modes.tangent");
  d.jmax = int(c.get_int("modes.jmax"));
  d.zeta = c.get_reals("modes.zeta");
  d.xi_set = c.get_site_reals("modes.xi");
  d.eps = c.get_real("dnls.eps");
  d.K = int(c.get_int("dnls.K"));
  d.D = int(c.get_int("dnls.D"));
  d.validate();
  return d;
}

KamSchedule kam_schedule(const RunConfig& c) {
  KamSchedule s;
  s.eta = c.get_real("kam.eta");
  s.varepsilon = c.get_real("dnls.eps");
  s.s0 = c.get_real("domain.s");
  s.r0 = c.get_real("domain.r");
  s.chi = c.get_real("kam.chi");
  s.K_glob = int(c.get_int("kam.K_glob"));
  return s;
}

DioParams dio_params(const RunConfig& c) {
  DioParams d;
  d.gamma0 = c.get_real("kam.gamma0");
  d.gamma = c.get_real("kam.gamma");
  d.tau = c.get_real("kam.tau");
  d.K_scan = int(c.get_int("kam.K_scan"));
  d.modulo_integers = c.get_bool("kam.modulo_integers");
  return d;
}

KamOptions kam_options(const RunConfig& c) {
  KamOptions o;
  o.domain = DomainSpec{c.get_real("domain.s"), c.get_real("domain.r"), c.get_real("domain.p")};
  o.domain.validate();
  o.dio = dio_params(c);
  o.lie.order_cap = int(c.get_int("kam.lie_order_cap"));
  o.lie.domain = o.domain;
  o.resonance_gamma = c.get_real("kam.resonance_gamma");
  o.residual_tol = c.get_real("kam.residual_tol");
  return o;
}

BirkhoffConfig birkhoff_config(const RunConfig& c) {
  BirkhoffConfig b;
  b.M = int(c.get_int("birkhoff.M"));
  b.N_split = int(c.get_int("birkhoff.N_split"));
  b.rho = c.get_real("birkhoff.rho");
  b.eta_acute = c.get_real("birkhoff.eta_acute");
  b.tau = c.get_real("birkhoff.tau");
  b.c1 = c.get_real("birkhoff.c1");
  b.c2 = c.get_real("birkhoff.c2");
  b.C0 = c.get_real("birkhoff.C0");
  b.N0 = c.get_real("birkhoff.N0");
  b.rho0 = c.get_real("birkhoff.rho0");
  return b;
}

MeasureConfig measure_config(const RunConfig& c) {
  MeasureConfig m;
  m.tangent = c.get_ints("modes.tangent");
  m.jmax = int(c.get_int("modes.jmax"));
  m.N_split = int(c.get_int("measure.N_split"));
  m.M = int(c.get_int("measure.M"));
  m.K = int(c.get_int("measure.K"));
  m.tau = c.get_real("measure.tau");
  m.c1 = c.get_real("measure.c1");
  m.c2 = c.get_real("measure.c2");
  m.C_star2 = c.get_real("measure.C_star2");
  m.mode = parse_threshold_mode(c.get_string("measure.mode"));
  m.validate();
  return m;
}

std::vector<double> measure_etas(const RunConfig& c) {
  double lo = c.get_real("measure.eta_min"), hi = c.get_real("measure.eta_max");
  int pts = int(c.get_int("measure.points"));
  if (!(lo > 0 && hi > lo) || pts < 2) throw std::invalid_argument("need 0 < eta_min < eta_max and points >= 2");
  std::vector<double> e;
  for (int i = 0; i < pts; ++i) e.push_back(lo * std::pow(hi / lo, double(i) / (pts - 1)));
  return e;
}

Pipeline build_pipeline(const RunConfig& c, bool with_birkhoff) {
  Pipeline p;
  p.dcfg = dnls_config(c);
  p.model = build_hamiltonian(p.dcfg, c.get_real("domain.r"));
  if (p.dcfg.eps == 0.0) {
    // linear lattice: already in normal form, and the schedule needs a positive size
    p.kam.nf = p.model.nf;
    p.kam.P = p.model.P;
    p.kam.converged = true;
  } else {
    p.kam = run_kam(p.model.nf, p.model.P, kam_schedule(c), int(c.get_int("kam.steps")), kam_options(c));
  }
  p.chain = std::make_shared<TransformChain>();
  p.chain->modes = p.model.modes;
  p.chain->zeta = p.dcfg.zeta;
  p.chain->rk_steps = int(c.get_int("dnls.rk_steps"));
  for (auto& g : p.kam.generators) p.chain->generators.push_back(g);
  if (with_birkhoff && p.kam.status == "ok" && !p.kam.P.empty()) {
    p.birkhoff = run_birkhoff(p.kam.nf, p.kam.P, birkhoff_config(c), dio_params(c), c.get_real("domain.p"));
    for (auto& g : p.birkhoff->generators) p.chain->generators.push_back(g);
  }
  return p;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s = {"selftest", "estimates", "kam",     "birkhoff",
                                             "simulate", "stability", "measure"};
  return s;
}

namespace {

struct Context {
  const RunConfig& cfg;
  fs::path dir;
  std::ostream& log;
  json tables = json::array();
  json summary = json::object();
  int exit_code = kExitOk;
  std::string status = "ok";
  std::string message;

  void table(const std::string& file, const Table& t, const std::string& tidy = "",
             std::vector<std::string> ids = {}, const std::string& variable = "variable",
             bool copy = false) {
    write_csv(dir / file, t);
    json entry = {{"file", file}};
    if (!tidy.empty()) {
      entry["tidy"] = tidy;
      entry["mode"] = copy ? "copy" : "melt";
      entry["ids"] = ids;
      entry["variable"] = variable;
    }
    tables.push_back(entry);
  }
  void fail(int code, const std::string& st, const std::string& msg) {
    if (exit_code == kExitOk) {
      exit_code = code;
      status = st;
      message = msg;
    }
  }
};

json num(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

void kam_status(Context& ctx, const KamRun& run) {
  if (run.status == "resonance") ctx.fail(kExitResonance, "resonance", run.message);
  else if (run.status != "ok") ctx.fail(kExitMath, run.status, run.message);
}

void checks_table(Context& ctx, const std::string& file, const std::vector<CheckRow>& rows) {
  Table t({"suite", "check", "value", "threshold", "pass"});
  bool ok = true;
  for (auto& r : rows) {
    t.add({r.suite, r.check, cell(r.value), cell(r.threshold), cell(r.pass)});
    ctx.summary[r.suite + "." + r.check] = num(r.value);
    ctx.log << (r.pass ? "PASS " : "FAIL ") << r.suite << '.' << r.check << " = " << format_double(r.value)
            << " (threshold " << format_double(r.threshold) << ")\n";
    ok = ok && r.pass;
  }
  ctx.table(file, t, "tidy_" + file, {"suite", "check"}, "variable");
  if (!ok) ctx.fail(kExitMath, "failure", "a property check failed");
}

void cmd_selftest(Context& ctx, std::uint64_t seed) {
  auto rows = algebra_suite(seed);
  auto cases = solver_oracle_cases(seed);
  for (auto& r : solver_suite(cases)) rows.push_back(r);
  Table t({"instance", "n", "K", "rel_error", "residual", "branch"});
  for (auto& c : cases) t.add({cell(c.instance), cell(c.n), cell(c.K), cell(c.rel_error), cell(c.residual), c.branch});
  ctx.table("solver_cases.csv", t, "tidy_solver_cases.csv", {"instance", "n", "K", "branch"});
  checks_table(ctx, "selftest.csv", rows);
}

void cmd_estimates(Context& ctx, std::uint64_t seed) {
  auto fams = estimate_families(seed);
  Table t({"family", "instance", "sigma", "measured", "shape", "ratio", "fit_half"});
  Table f({"family", "fitted_C", "worst_test", "pass"});
  for (auto& fam : fams) {
    for (auto& r : fam.rows)
      t.add({r.family, cell(r.instance), cell(r.sigma), cell(r.measured), cell(r.shape), cell(r.ratio), cell(r.fit_half)});
    f.add({fam.name, cell(fam.fitted_C), cell(fam.worst_test), cell(fam.pass)});
  }
  ctx.table("estimates.csv", t, "tidy_estimates.csv", {"family", "instance", "sigma", "fit_half"});
  ctx.table("estimate_fits.csv", f);
  checks_table(ctx, "estimate_checks.csv", estimate_suite(fams));
}

void write_kam(Context& ctx, const KamRun& run) {
  Table t({"step", "plow", "plow_next", "log_ratio", "superlinear", "residual_rel", "phigh", "F_norm",
           "omega_shift", "min_divisor", "K_used", "K_raw", "clamped", "eps_m", "lie_remainder",
           "torus_residual", "minus1_norm"});
  Table w({"step", "index", "omega"});
  for (auto& r : run.trace) {
    t.add({cell(r.step), cell(r.plow), cell(r.plow_next), cell(r.log_ratio), cell(r.log_ratio >= 1.1),
           cell(r.residual_rel), cell(r.phigh), cell(r.F_norm), cell(r.omega_shift), cell(r.min_divisor),
           cell(r.K_used), cell(r.K_raw), cell(r.clamped), cell(r.eps_m), cell(r.lie_remainder),
           cell(r.torus_residual), cell(r.minus1_norm)});
    for (std::size_t i = 0; i < r.omega.size(); ++i) w.add({cell(r.step), cell(i), cell(r.omega[i])});
  }
  ctx.table("kam_steps.csv", t, "tidy_kam.csv", {"step"});
  ctx.table("kam_omega.csv", w, "tidy_kam_omega.csv", {"step", "index"});
  ctx.summary["kam_status"] = run.status;
  ctx.summary["kam_final_plow"] = num(run.final_plow);
  ctx.summary["kam_steps_run"] = run.trace.size();
  ctx.log << "kam: " << run.trace.size() << " steps, status " << run.status << ", final |||P^low||| "
          << format_double(run.final_plow) << '\n';
  kam_status(ctx, run);
}

void cmd_kam(Context& ctx) {
  Pipeline p = build_pipeline(ctx.cfg, false);
  ctx.summary["taylor_remainder"] = num(p.model.taylor_remainder);
  write_kam(ctx, p.kam);
}

void cmd_birkhoff(Context& ctx, std::uint64_t seed) {
  Pipeline p = build_pipeline(ctx.cfg, true);
  write_kam(ctx, p.kam);
  if (!p.birkhoff) {
    ctx.fail(kExitMath, "failure", "Birkhoff steps need a successful KAM run with a nonzero remainder");
    return;
  }
  const BirkhoffRun& br = *p.birkhoff;
  Table t({"step", "class", "norm_before", "norm_after", "min_divisor", "branch"});
  for (auto& r : br.rows)
    t.add({cell(r.step), r.cls, cell(r.norm_before), cell(r.norm_after), cell(r.min_divisor), r.branch});
  ctx.table("birkhoff_steps.csv", t, "tidy_birkhoff.csv", {"step", "class", "branch"});
  std::map<std::pair<std::string, std::string>, std::pair<long, long>> counts;
  for (auto& s : br.solves) {
    auto& e = counts[{s.dispatch, s.report.branch}];
    e.first += 1;
    e.second += s.dispatch_sound ? 0 : 1;
  }
  Table d({"dispatch", "branch", "count", "unsound"});
  for (auto& [k, v] : counts) d.add({k.first, k.second, cell(v.first), cell(v.second)});
  ctx.table("birkhoff_dispatch.csv", d);
  ctx.summary["birkhoff_status"] = br.status;
  ctx.summary["max_R_rel"] = num(br.max_R_rel);
  ctx.summary["initial_scale"] = num(br.initial_scale);
  ctx.summary["classes"] = {{"Z", br.parts.Z.size()}, {"R", br.parts.R.size()}, {"Q", br.parts.Q.size()},
                            {"T", br.parts.T.size()}};
  ctx.summary["vf_T"] = {num(br.vf_T_p2), num(br.vf_T_pm1)};
  ctx.summary["vf_Q"] = {num(br.vf_Q_p2), num(br.vf_Q_pm1)};
  ctx.summary["derived"] = {{"c1", num(br.derived.c1)}, {"c2", num(br.derived.c2)}, {"C0", num(br.derived.C0)},
                            {"K_raw", br.derived.K_raw}, {"window_ok", br.derived.window_ok},
                            {"window_note", br.derived.window_note}};
  ctx.log << "birkhoff: status " << br.status << ", max R / initial scale " << format_double(br.max_R_rel) << '\n';
  if (br.status == "resonance") ctx.fail(kExitResonance, "resonance", br.message);
  else if (br.status != "ok") ctx.fail(kExitMath, br.status, br.message);
  if (!ctx.cfg.get_bool("birkhoff.remove_x") || br.status != "ok" || ctx.cfg.get_int("birkhoff.M") < 1) return;

  double delta = ctx.cfg.get_real("birkhoff.delta");
  double pp = ctx.cfg.get_real("domain.p");
  auto z0 = make_z0(*p.model.modes, pp, 0.5 * delta, seed);
  XRemoval xr = remove_x_dependence(p.kam.nf, br.P, birkhoff_config(ctx.cfg), dio_params(ctx.cfg), delta, z0);
  Table x({"abs_alpha", "rel_xdep"});
  for (auto& [a, v] : xr.rel_xdep_by_degree) x.add({cell(a), cell(v)});
  ctx.table("xremoval.csv", x, "tidy_xremoval.csv", {"abs_alpha"});
  ctx.summary["xremoval"] = {{"status", xr.status},         {"rounds_a", xr.rounds_a},
                             {"rounds_b", xr.rounds_b},     {"budget_a", xr.budget_a},
                             {"initial_rel_xdep", num(xr.initial_rel_xdep)},
                             {"max_rel_xdep", num(xr.max_rel_xdep)}, {"B_terms", xr.B.size()},
                             {"B_fit_C", num(xr.B_fit_C)}};
  ctx.log << "x-removal: status " << xr.status << ", max relative x-dependence " << format_double(xr.max_rel_xdep)
          << '\n';
  if (xr.status == "resonance") ctx.fail(kExitResonance, "resonance", xr.message);
  else if (xr.status != "ok") ctx.fail(kExitMath, xr.status, xr.message);
}

IntegratorOptions integrator(const RunConfig& c) {
  IntegratorOptions o;
  o.dt = c.get_real("dnls.dt");
  o.drift_tol = c.get_real("dnls.drift_tol");
  return o;
}

void cmd_simulate(Context& ctx, std::uint64_t seed) {
  DnlsConfig d = dnls_config(ctx.cfg);
  auto modes = ModeSystem::make(d.tangent, d.jmax);
  double pp = ctx.cfg.get_real("domain.p");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, 2.0 * M_PI);
  PhasePoint w = PhasePoint::zeros(*modes);
  for (auto& x : w.x) x = ux(rng);
  auto z0 = make_z0(*modes, pp, ctx.cfg.get_real("dnls.z_norm"), rng());
  for (std::size_t a = 0; a < z0.size(); ++a) w.z[a] = z0[a], w.zb[a] = std::conj(z0[a]);
  LatticeState s{to_lattice(w, *modes, d.zeta), 0.0};
  DnlsSimulator sim(d);
  const double E0 = sim.energy(s.q);
  Table t({"t", "energy", "energy_drift", "mass", "gauge", "norm_p"});
  auto obs = [&](const LatticeState& st) {
    double e = sim.energy(st.q);
    t.add({cell(st.t), cell(e), cell(std::abs(e - E0) / std::max(std::abs(E0), 1e-300)), cell(sim.mass(st.q)),
           cell(sim.gauge(st.q)), cell(lattice_norm(st.q, d.jmax, pp))});
  };
  IntegrationStats st = sim.integrate(s, ctx.cfg.get_real("dnls.T"), integrator(ctx.cfg),
                                      ctx.cfg.get_real("dnls.sample_dt"), obs);
  ctx.table("simulate.csv", t, "tidy_simulate.csv", {"t"}, "observable");
  ctx.summary["steps"] = st.steps;
  ctx.summary["rejections"] = st.rejections;
  ctx.summary["max_energy_drift"] = num(st.max_energy_drift);
  ctx.log << "simulate: " << st.steps << " steps, max relative energy drift " << format_double(st.max_energy_drift)
          << '\n';
}

void cmd_stability(Context& ctx, std::uint64_t seed, int jobs) {
  Pipeline p = build_pipeline(ctx.cfg, true);
  kam_status(ctx, p.kam);
  if (p.birkhoff && p.birkhoff->status != "ok")
    ctx.fail(p.birkhoff->status == "resonance" ? kExitResonance : kExitMath, p.birkhoff->status,
             p.birkhoff->message);
  if (ctx.exit_code != kExitOk) return;

  std::vector<double> deltas = ctx.cfg.get_reals("dnls.deltas");
  auto one = [&](std::size_t i) {
    StabilityConfig sc;
    sc.delta = deltas[i];
    sc.M = int(ctx.cfg.get_int("birkhoff.M"));
    sc.p = ctx.cfg.get_real("domain.p");
    sc.seed = seed + i;
    sc.z0_fraction = ctx.cfg.get_real("dnls.z0_fraction");
    sc.samples_per_direction = int(ctx.cfg.get_int("dnls.samples_per_direction"));
    sc.integ = integrator(ctx.cfg);
    sc.horizon_override = ctx.cfg.get_real("dnls.horizon");
    return stability_experiment(p.dcfg, p.chain, sc);
  };
  // Independent runs; each one is deterministic, so the worker count never changes the output.
  std::vector<StabilityReport> reps(deltas.size());
  for (std::size_t b = 0; b < deltas.size(); b += std::size_t(std::max(jobs, 1))) {
    std::vector<std::future<StabilityReport>> fut;
    for (std::size_t i = b; i < std::min(deltas.size(), b + std::size_t(std::max(jobs, 1))); ++i)
      fut.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, one, i));
    for (std::size_t i = 0; i < fut.size(); ++i) reps[b + i] = fut[i].get();
  }

  const int n = p.model.modes->n;
  std::vector<std::string> h = {"delta", "t", "H", "Ntilde", "distance", "band"};
  for (int i = 0; i < n; ++i) h.push_back("Ytilde_" + std::to_string(i + 1));
  Table t(h);
  Table s({"delta", "horizon", "initial_distance", "max_distance", "bound", "pass", "verdict", "T_star",
           "max_energy_drift"});
  json jr = json::array();
  for (auto& r : reps) {
    for (auto& o : r.samples) {
      std::vector<std::string> row = {cell(r.delta), cell(o.t), cell(o.H), cell(o.Ntilde), cell(o.distance),
                                      cell(2.0 * r.delta)};
      for (double y : o.Ytilde) row.push_back(cell(y));
      t.add(row);
    }
    s.add({cell(r.delta), cell(r.horizon), cell(r.initial_distance), cell(r.max_distance), cell(2.0 * r.delta),
           cell(r.pass), r.verdict, cell(r.T_star), cell(r.max_energy_drift)});
    jr.push_back({{"delta", r.delta}, {"max_distance", num(r.max_distance)}, {"verdict", r.verdict}});
    ctx.log << "stability: delta " << format_double(r.delta) << ", horizon " << format_double(r.horizon)
            << ", sup distance " << format_double(r.max_distance) << " vs 2 delta = " << format_double(2 * r.delta)
            << ": " << r.verdict << '\n';
  }
  ctx.table("stability.csv", t, "tidy_stability.csv", {"delta", "t"}, "observable");
  ctx.table("stability_summary.csv", s);
  ctx.summary["runs"] = jr;
  ctx.summary["generators"] = p.chain->generators.size();
}

void cmd_measure(Context& ctx, std::uint64_t seed) {
  MeasureConfig mc = measure_config(ctx.cfg);
  auto etas = measure_etas(ctx.cfg);
  MeasureReport r = measure_estimate(mc, etas, std::size_t(ctx.cfg.get_int("measure.samples")), seed,
                                     int(ctx.cfg.get_int("measure.bootstrap")));
  Table t({"eta_acute", "fraction", "ci_lo", "ci_hi", "n_samples"});
  for (auto& pt : r.points) t.add({cell(pt.eta), cell(pt.fraction), cell(pt.ci_lo), cell(pt.ci_hi), cell(pt.samples)});
  ctx.table("measure.csv", t, "tidy_measure.csv", {}, "", true);
  ctx.summary["slope"] = r.slope_defined ? num(r.slope) : json(nullptr);
  ctx.summary["queries"] = r.queries;
  ctx.summary["active_sites"] = r.active.size();
  ctx.summary["j_star"] = num(r.info.j_star);
  ctx.summary["j_star2"] = num(r.info.j_star2);
  ctx.summary["max_site"] = r.info.max_site;
  ctx.summary["threshold_mode"] = threshold_mode_name(mc.mode);
  ctx.log << "measure: " << r.queries << " queries, slope "
          << (r.slope_defined ? format_double(r.slope) : std::string("undefined")) << '\n';

  std::vector<int> sites = ctx.cfg.get_ints("measure.fd_sites");
  if (sites.empty()) return;
  const RunConfig& cfg = ctx.cfg;
  KamRunner runner = [&cfg](const DnlsConfig& d) {
    DnlsModel m = build_hamiltonian(d, cfg.get_real("domain.r"));
    KamRun k = run_kam(m.nf, m.P, kam_schedule(cfg), int(cfg.get_int("kam.steps")), kam_options(cfg));
    if (k.status != "ok") throw SolverFailure("KAM " + k.status + ": " + k.message);
    return k.nf;
  };
  FreqDerivReport fd = frequency_derivative_check(dnls_config(cfg), sites, runner, cfg.get_real("measure.fd_h"),
                                                  cfg.get_real("measure.fd_C"));
  Table f({"a", "kind", "index", "derivative", "scaled"});
  for (auto& row : fd.rows) f.add({cell(row.a), row.kind, cell(row.index), cell(row.derivative), cell(row.scaled)});
  ctx.table("freq_deriv.csv", f, "tidy_freq_deriv.csv", {"a", "kind", "index"});
  ctx.summary["fd_fitted_C"] = num(fd.fitted_C);
  ctx.summary["fd_pass"] = fd.pass;
  ctx.log << "frequency derivatives: fitted C " << format_double(fd.fitted_C) << '\n';
  if (fd.status != "ok") ctx.fail(kExitMath, fd.status, fd.message);
}

}  // namespace

int run(const RunRequest& req, std::ostream& log) {
  RunConfig cfg;
  try {
    if (std::find(subcommands().begin(), subcommands().end(), req.subcommand) == subcommands().end())
      throw SchemaError("unknown subcommand '" + req.subcommand + "'");
    if (!req.config_path.empty()) cfg = RunConfig::from_file(req.config_path);
    for (auto& o : req.overrides) cfg.apply_override(o);
    if (req.seed) cfg.set("output.seed", std::to_string(*req.seed));
    if (req.jobs) cfg.set("output.jobs", std::to_string(*req.jobs));
    if (cfg.get_int("output.jobs") < 1) throw SchemaError("output.jobs must be >= 1");
  } catch (const SchemaError& e) {
    log << "schema error: " << e.what() << '\n';
    return kExitSchema;
  }

  Context ctx{cfg, fs::path(req.out_dir), log, json::array(), json::object(), kExitOk, "ok", ""};
  fs::create_directories(ctx.dir);
  const std::uint64_t seed = cfg.get_u64("output.seed");
  try {
    const std::string& s = req.subcommand;
    if (s == "selftest") cmd_selftest(ctx, seed);
    else if (s == "estimates") cmd_estimates(ctx, seed);
    else if (s == "kam") cmd_kam(ctx);
    else if (s == "birkhoff") cmd_birkhoff(ctx, seed);
    else if (s == "simulate") cmd_simulate(ctx, seed);
    else if (s == "stability") cmd_stability(ctx, seed, int(cfg.get_int("output.jobs")));
    else if (s == "measure") cmd_measure(ctx, seed);
  } catch (const SchemaError& e) {
    ctx.fail(kExitSchema, "schema", e.what());
  } catch (const std::invalid_argument& e) {
    ctx.fail(kExitSchema, "schema", e.what());
  } catch (const ResonanceError& e) {
    ctx.fail(kExitResonance, "resonance", e.what());
  } catch (const std::exception& e) {
    ctx.fail(kExitMath, "failure", e.what());
  }

  json m;
  m["subcommand"] = req.subcommand;
  m["status"] = ctx.status;
  m["exit_code"] = ctx.exit_code;
  m["message"] = ctx.message;
  m["seed"] = seed;
  json c = json::object();
  for (auto& [k, v] : cfg.values()) c[k] = v;
  m["config"] = c;
  m["tables"] = ctx.tables;
  m["summary"] = ctx.summary;
  {
    std::ofstream os(ctx.dir / "manifest.json", std::ios::binary | std::ios::trunc);
    os << m.dump(2) << '\n';
  }
  if (ctx.exit_code != kExitOk) log << "error (" << ctx.status << "): " << ctx.message << '\n';
  if (cfg.get_bool("output.tidy")) {
    try {
      for (auto& pth : emit_plotdata(ctx.dir)) log << "wrote " << pth.string() << '\n';
    } catch (const std::exception& e) {
      log << "plot data: " << e.what() << '\n';
    }
  }
  return ctx.exit_code;
}

}  // namespace dnlsnf
