#include "pnpreg/cli/commands.hpp"

#include "pnpreg/cli/problem.hpp"
#include "pnpreg/denoisers.hpp"
#include "pnpreg/solver.hpp"

#include <future>
#include <ostream>

namespace pnpreg::cli {

namespace fs = std::filesystem;

void Checks::add(const std::string& name, bool passed, double value, double threshold) {
  list_.push_back({{"name", name}, {"passed", passed}, {"value", number(value)}, {"threshold", number(threshold)}});
  all_ = all_ && passed;
}

void Checks::add(const std::string& name, bool passed) {
  list_.push_back({{"name", name}, {"passed", passed}});
  all_ = all_ && passed;
}

namespace {

constexpr Index kDirectLimit = DiscrepancyProx<double>::kDirectSolveLimit;

struct Context {
  const ExperimentConfig& cfg;
  fs::path config_dir;
  fs::path out;
  bool verbose;
  std::ostream& log;

  void note(const std::string& msg) const {
    if (verbose)
      log << "[" << cfg.command << "] " << msg << '\n';
  }
};

Json header(const Context& ctx) {
  Json j;
  j["command"] = ctx.cfg.command;
  j["seed"] = ctx.cfg.seed;
  j["denoiser"] = ctx.cfg.denoiser.describe();
  return j;
}

int finish(const Context& ctx, Json report, const Checks& checks) {
  report["checks"] = checks.json();
  report["passed"] = checks.all_passed();
  write_json_file(ctx.out / "report.json", report);
  ctx.note(checks.all_passed() ? "all checks passed" : "some checks failed");
  return checks.all_passed() ? kAllPassed : kCheckFailed;
}

GeneratedProblem load_problem(const Context& ctx, std::uint64_t seed) {
  return generate_problem(*ctx.cfg.problem, seed, ctx.config_dir);
}

double step_for(const ExperimentConfig& cfg, const Discrepancyd& D) {
  return cfg.solver.step ? StepConfig<double>::checked(D, *cfg.solver.step).s : StepConfig<double>::midpoint(D).s;
}

// ---------------------------------------------------------------------------

int certify_command(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  Index dim = cfg.certify.dim;
  double step = 1;
  Json report = header(ctx);
  if (cfg.problem) {
    const auto prob = load_problem(ctx, cfg.seed);
    const auto D = Discrepancyd::least_squares(prob.op);
    dim = prob.op.in_dim();
    step = step_for(cfg, D);
    report["problem"] = prob.description;
  }
  const auto d = build_denoiser(cfg.denoiser, dim, step);
  CertifyConfig<double> cc;
  cc.grid = cfg.certify.lambdas;
  cc.dim = dim;
  cc.pairs = cfg.certify.pairs;
  cc.probes = cfg.certify.probes;
  cc.samples = cfg.certify.samples;
  cc.radius = cfg.certify.radius;
  cc.seed = cfg.seed;
  ctx.note("certifying " + d.family() + " in dimension " + std::to_string(dim));
  const auto rep = certify(d, cc);

  report["family"] = rep.family;
  report["dimension"] = dim;
  report["admissible_set"] = {{"description", rep.admissible_set}, {"radius", rep.e_radius}};
  report["verdicts"] = {{"B1", to_string(rep.b1.verdict)},
                        {"B2", to_string(rep.b2.verdict)},
                        {"B3", to_string(rep.b3.verdict)},
                        {"B4", to_string(rep.b4.verdict)}};
  Json b1 = Json::array();
  for (const auto& e : rep.b1.entries)
    b1.push_back({{"lambda", e.lambda}, {"bound", number(e.bound)}, {"max_ratio", e.max_ratio},
                  {"verdict", to_string(e.verdict)}});
  report["B1"] = b1;
  std::size_t monotone = 0;
  double worst_final = 0;
  for (std::size_t p = 0; p < rep.b2.dev.size(); ++p) {
    monotone += rep.b2.monotone[p] ? 1 : 0;
    worst_final = std::max(worst_final, rep.b2.dev[p].back());
  }
  report["B2"] = {{"lambdas", rep.b2.grid},
                  {"tolerance_factor", rep.b2.tolerance_factor},
                  {"monotone_probes", monotone},
                  {"probes", rep.b2.dev.size()},
                  {"max_final_deviation", worst_final}};
  report["B3"] = {{"tolerance_factor", rep.b3.tolerance_factor},
                  {"references_consistent", rep.b3.references_consistent}};
  report["B4"] = {{"constant", number(rep.b4.constant)},
                  {"tail_growth", number(rep.b4.tail_growth)},
                  {"max_ratio", rep.b4.max_ratio},
                  {"failure", rep.b4.failure}};
  if (cfg.denoiser.family == "causal" && !cfg.denoiser.scaling) {
    Json sym = Json::array();
    for (double l : cc.grid) {
      const auto s = causal_symbol_stats(l);
      sym.push_back({{"lambda", l}, {"ratio", s.ratio}, {"sup_symbol", s.sup_symbol}});
    }
    report["symbol"] = sym;
  }

  CsvWriter csv(ctx.out / "tables.csv", {"condition", "lambda", "probe", "value", "reference"});
  for (const auto& r : rep.rows()) {
    csv.cell(r.condition).cell(r.lambda).cell(static_cast<long long>(r.probe)).cell(r.value).cell(r.reference);
    csv.end_row();
  }

  Checks checks;
  checks.add("B1 contraction", passed(rep.b1.verdict));
  checks.add("B2 pointwise convergence", passed(rep.b2.verdict));
  checks.add("B3 weak-uniform convergence", passed(rep.b3.verdict));
  checks.add("B4 deviation bounded by contraction gap", passed(rep.b4.verdict));
  return finish(ctx, report, checks);
}

// ---------------------------------------------------------------------------

int solve_command(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto prob = load_problem(ctx, cfg.seed);
  write_json_file(ctx.out / "problem.json", problem_to_json(prob));
  const auto D = Discrepancyd::least_squares(prob.op);
  const double s = step_for(cfg, D);
  const auto d = build_denoiser(cfg.denoiser, prob.op.in_dim(), s);
  const double lambda = *cfg.solver.lambda;
  const auto p = make_problem(D, d, lambda, prob.y, std::optional<double>(s));
  const double tol = cfg.solver.tol;
  ctx.note("solving " + prob.description + " with " + d.family() + " at lambda=" + Json(lambda).dump());
  const auto fbs = solve_fbs(p, Vectord(Vectord::Zero(prob.op.in_dim())), tol, cfg.solver.max_iter, true);

  Json report = header(ctx);
  report["problem"] = prob.description;
  report["lambda"] = lambda;
  report["step"] = s;
  report["beta"] = D.beta();
  report["certificate"] = fbs.certificate;
  report["tol"] = tol;
  report["fbs"] = {{"converged", fbs.converged},
                   {"iterations", fbs.iterations},
                   {"banach_bound", fbs.banach_bound},
                   {"empirical_rate", fbs.empirical_rate},
                   {"max_tail_ratio", fbs.max_tail_ratio},
                   {"final_residual", fbs.final_residual()}};
  report["x_star"] = vector_to_json(fbs.x_star);

  {
    CsvWriter csv(ctx.out / "trace.csv", {"iteration", "residual", "objective"});
    for (std::size_t i = 0; i < fbs.residuals.size(); ++i) {
      csv.cell(static_cast<long long>(i + 1)).cell(fbs.residuals[i]);
      csv.cell(i < fbs.objective.size() ? fbs.objective[i] : std::numeric_limits<double>::quiet_NaN());
      csv.end_row();
    }
  }

  Checks checks;
  checks.add("fbs converged", fbs.converged, fbs.final_residual(), tol);
  checks.add("iterations within Banach bound", fbs.iterations <= fbs.banach_bound, fbs.iterations,
             double(fbs.banach_bound));
  if (fbs.residuals.size() >= 2)
    checks.add("tail residual ratio within certificate + 0.05", fbs.max_tail_ratio <= fbs.certificate + 0.05,
               fbs.max_tail_ratio, fbs.certificate + 0.05);
  const double fp = (fbs.x_star - fbs_step(p, fbs.x_star)).norm();
  checks.add("fixed-point residual", fp <= tol, fp, tol);

  const bool small = prob.op.in_dim() <= kDirectLimit && prob.op.out_dim() <= kDirectLimit;
  if (cfg.solver.admm && small) {
    const auto admm = solve_admm(p, AdmmInit<double>{}, tol, cfg.solver.max_iter);
    const double gap = (admm.x_star - fbs.x_star).norm();
    report["admm"] = {{"converged", admm.converged}, {"iterations", admm.iterations}, {"distance_to_fbs", gap}};
    // Non-convergence of ADMM is reported but is not a failed check.
    if (admm.converged)
      checks.add("admm agrees with fbs", gap <= 10 * tol, gap, 10 * tol);
  }
  if (cfg.denoiser.family == "prox-quadratic" && !cfg.denoiser.scaling && small) {
    const double folded = cfg.denoiser.step.value_or(s);
    const Vectord direct = tikhonov_solve(prob.op, prob.y, cfg.denoiser.a * lambda * folded / s);
    const double rel = (fbs.x_star - direct).norm() / std::max(1.0, direct.norm());
    report["direct_solve_relative_error"] = rel;
    checks.add("matches direct Tikhonov solve", rel <= 1e-8, rel, 1e-8);
    // First-order condition grad D + lambda grad R = 0 with R = a ||x||^2 / 2 scaled by folded/s.
    const Vectord foc = D.gradient(fbs.x_star, prob.y) + (cfg.denoiser.a * lambda * folded / s) * fbs.x_star;
    checks.add("first-order optimality", foc.norm() <= 1e-6, foc.norm(), 1e-6);
  }
  return finish(ctx, report, checks);
}

// ---------------------------------------------------------------------------

struct StabilityRow {
  double lambda;
  int pair;
  StabilityResult<double> r;
};

int stability_command(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto prob = load_problem(ctx, cfg.seed);
  const auto D = Discrepancyd::least_squares(prob.op);
  const double s = step_for(cfg, D);
  const auto d = build_denoiser(cfg.denoiser, prob.op.in_dim(), s);
  const double tol = std::min(cfg.solver.tol, 1e-10);

  std::vector<std::future<std::vector<StabilityRow>>> jobs;
  for (std::size_t li = 0; li < cfg.stability.lambdas.size(); ++li) {
    const double lambda = cfg.stability.lambdas[li];
    jobs.push_back(std::async(std::launch::async, [&, lambda, li] {
      const auto p = make_problem(D, d, lambda, prob.y, std::optional<double>(s));
      std::vector<StabilityRow> rows;
      for (int k = 0; k < cfg.stability.pairs; ++k) {
        Rng rng = make_rng(cfg.seed, 1000 + li * 100000 + std::uint64_t(k));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const Vectord y1 = prob.y + sphere_vector<double>(rng, prob.y.size(), cfg.stability.noise * unif(rng));
        const Vectord y2 = y1 + sphere_vector<double>(rng, prob.y.size(), cfg.stability.noise * unif(rng));
        rows.push_back({lambda, k, stability_experiment(p, y1, y2, tol, cfg.solver.max_iter)});
      }
      return rows;
    }));
  }
  std::vector<StabilityRow> rows;
  for (auto& j : jobs)
    for (auto& r : j.get())
      rows.push_back(r);

  Checks checks;
  Json per_lambda = Json::array();
  CsvWriter csv(ctx.out / "stability.csv",
                {"lambda", "pair", "dy_norm", "lhs", "rhs_gap", "rhs_modulus", "lipschitz", "holds"});
  bool all = true, all_gap = true;
  double worst = 0;
  for (double lambda : cfg.stability.lambdas) {
    double max_amp = 0;
    for (const auto& row : rows) {
      if (row.lambda != lambda)
        continue;
      const auto& r = row.r;
      csv.cell(lambda).cell(static_cast<long long>(row.pair)).cell(r.dy_norm).cell(r.lhs).cell(r.rhs_gap);
      csv.cell(r.rhs_modulus).cell(r.lipschitz).cell(static_cast<long long>(r.holds));
      csv.end_row();
      all = all && r.holds;
      all_gap = all_gap && r.holds_gap;
      if (r.dy_norm > 0)
        max_amp = std::max(max_amp, r.lhs / r.dy_norm);
      if (r.rhs_modulus > 0)
        worst = std::max(worst, r.lhs / r.rhs_modulus);
    }
    const double L = d.lipschitz_bound(lambda);
    per_lambda.push_back({{"lambda", lambda},
                          {"lipschitz", L},
                          {"max_amplification", max_amp},
                          {"bound_factor", s * L / (1 - L) * prob.op.norm_bound()}});
  }
  Json report = header(ctx);
  report["problem"] = prob.description;
  report["step"] = s;
  report["tol"] = tol;
  report["pairs"] = rows.size();
  report["per_lambda"] = per_lambda;
  report["max_lhs_over_rhs"] = worst;
  checks.add("stability estimate with operator-norm modulus", all, worst, 1.0);
  checks.add("stability estimate with gradient gap", all_gap);
  return finish(ctx, report, checks);
}

// ---------------------------------------------------------------------------

struct SeedRun {
  std::uint64_t seed;
  GeneratedProblem prob;
  StudyReport<double> rep;
};

std::vector<SeedRun> run_studies(const Context& ctx, const Denoiserd* fixed = nullptr) {
  const auto& cfg = ctx.cfg;
  std::vector<std::future<SeedRun>> jobs;
  for (std::uint64_t seed : cfg.study.seeds) {
    jobs.push_back(std::async(std::launch::async, [&ctx, &cfg, seed, fixed] {
      auto prob = load_problem(ctx, seed);
      const auto D = Discrepancyd::least_squares(prob.op);
      const double s = step_for(cfg, D);
      const auto d = fixed ? *fixed : build_denoiser(cfg.denoiser, prob.op.in_dim(), s);
      const ConvergenceStudy<double> cs{.op = prob.op,
                                        .x_true = prob.x_true,
                                        .y = prob.y,
                                        .deltas = cfg.study.deltas,
                                        .seed = seed,
                                        .tol = cfg.solver.tol,
                                        .max_iter = cfg.solver.max_iter,
                                        .step = s,
                                        .warm_start = cfg.study.warm_start,
                                        .limit = std::nullopt,
                                        .family = cfg.denoiser.limit_family()};
      ParameterChoice<double> pc{cfg.study.M, cfg.study.lambda_min, cfg.study.lambda_max, 1e-6};
      auto rep = run_convergence_study(cs, pc, d);
      return SeedRun{seed, std::move(prob), std::move(rep)};
    }));
  }
  std::vector<SeedRun> out;
  for (auto& j : jobs)
    out.push_back(j.get());
  return out;
}

int study_command(const Context& ctx) {
  ctx.note("running " + std::to_string(ctx.cfg.study.seeds.size()) + " seeded studies");
  const auto runs = run_studies(ctx);
  Checks checks;
  Json seeds = Json::array();
  CsvWriter csv(ctx.out / "study.csv", {"seed", "k", "delta", "eta", "lambda", "lipschitz", "iterations", "error",
                                        "norm_x", "error_bound", "kernel_ratio", "identity_residual"});
  for (const auto& run : runs) {
    const auto& rep = run.rep;
    Json errors = Json::array(), lambdas = Json::array();
    for (const auto& r : rep.records) {
      csv.cell(static_cast<long long>(run.seed)).cell(static_cast<long long>(r.k)).cell(r.delta).cell(r.eta);
      csv.cell(r.lambda).cell(r.lipschitz).cell(static_cast<long long>(r.iterations)).cell(r.error);
      csv.cell(r.norm_x).cell(r.error_bound).cell(r.kernel_ratio).cell(r.identity_residual);
      csv.end_row();
      errors.push_back(r.error);
      lambdas.push_back(r.lambda);
    }
    const std::string tag = "seed " + std::to_string(run.seed) + ": ";
    seeds.push_back({{"seed", run.seed},
                     {"problem", run.prob.description},
                     {"step", rep.step},
                     {"limit", vector_to_json(rep.limit)},
                     {"lambdas", lambdas},
                     {"errors", errors},
                     {"first_error", rep.first_error},
                     {"final_error", rep.final_error},
                     {"tail_slope", rep.tail_slope},
                     {"max_norm", rep.max_norm},
                     {"limit_in_e", rep.limit_in_e},
                     {"warnings", rep.warnings}});
    checks.add(tag + "final error at most a quarter of the first", rep.error_reduced, rep.final_error,
               rep.first_error / 4);
    checks.add(tag + "log-error trend over the last half is negative", rep.trend_negative, rep.tail_slope, 0.0);
    checks.add(tag + "errors within the boundedness bound", rep.within_error_bound);
    checks.add(tag + "inverse-denoiser identity along the run", rep.identity_ok);
  }
  Json report = header(ctx);
  report["M"] = ctx.cfg.study.M;
  report["deltas"] = ctx.cfg.study.deltas;
  report["runs"] = seeds;
  return finish(ctx, report, checks);
}

int characterize_command(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto runs = run_studies(ctx);
  Checks checks;
  Json out_runs = Json::array();
  CsvWriter csv(ctx.out / "limit.csv", {"seed", "k", "lambda", "feasibility", "h_norm", "kernel_component",
                                        "kernel_ratio", "identity_residual"});
  for (const auto& run : runs) {
    const auto& op = run.prob.op;
    const auto D = Discrepancyd::least_squares(op);
    const double s = run.rep.step;
    const auto d = build_denoiser(cfg.denoiser, op.in_dim(), s);
    if (!d.has_residual_map())
      throw ConfigError("denoiser", "family '" + d.family() + "' has no inverse, so H cannot be evaluated");
    const KernelProjector<double> proj(op);
    bool identity_ok = true;
    LimitCharacterization<double> tail{};
    for (const auto& r : run.rep.records) {
      const auto lc = characterize_limit(op, d, r.lambda, s, r.x, r.y_noisy, cfg.study.characterize_tol, &proj);
      csv.cell(static_cast<long long>(run.seed)).cell(static_cast<long long>(r.k)).cell(r.lambda);
      csv.cell(lc.feasibility).cell(lc.h_norm).cell(lc.kernel_component).cell(lc.kernel_ratio);
      csv.cell(lc.identity_residual);
      csv.end_row();
      identity_ok = identity_ok && lc.identity_residual <= 1e-8 * (1 + r.x.norm());
      tail = lc;
    }
    const std::string tag = "seed " + std::to_string(run.seed) + ": ";
    out_runs.push_back({{"seed", run.seed},
                        {"problem", run.prob.description},
                        {"kernel_dimension", proj.kernel_dim()},
                        {"tail_lambda", run.rep.records.back().lambda},
                        {"tail_feasibility", tail.feasibility},
                        {"tail_kernel_component", tail.kernel_component},
                        {"tail_kernel_ratio", tail.kernel_ratio},
                        {"ratio_is_absolute", tail.ratio_is_absolute},
                        {"distance_to_predicted_limit", run.rep.final_error}});
    const double tol = cfg.study.characterize_tol;
    checks.add(tag + "H(x) orthogonal to ker(A) at the tail", tail.kernel_ratio <= tol, tail.kernel_ratio, tol);
    checks.add(tag + "A x = y at the tail", tail.feasibility <= tol * (1 + run.prob.y.norm()), tail.feasibility,
               tol * (1 + run.prob.y.norm()));
    checks.add(tag + "inverse-denoiser identity at every k", identity_ok);
  }
  Json report = header(ctx);
  report["M"] = cfg.study.M;
  report["runs"] = out_runs;
  return finish(ctx, report, checks);
}

} // namespace

int run_experiment(const ExperimentConfig& cfg, const fs::path& config_dir, const fs::path& out, bool verbose,
                   std::ostream& log) {
  fs::create_directories(out);
  const Context ctx{cfg, config_dir, out, verbose, log};
  if (cfg.command == "certify-denoiser")
    return certify_command(ctx);
  if (cfg.command == "solve")
    return solve_command(ctx);
  if (cfg.command == "stability")
    return stability_command(ctx);
  if (cfg.command == "convergence-study")
    return study_command(ctx);
  return characterize_command(ctx);
}

int run_command(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  try {
    const Json j = read_json_file(opts.config);
    const auto cfg = parse_config(j, opts.command, opts.seed);
    return run_experiment(cfg, opts.config.parent_path(), opts.out, opts.verbose, log);
  } catch (const ConfigError& e) {
    err << "pnp-reg: invalid config: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "pnp-reg: " << e.what() << '\n';
  }
  return kExecutionError;
}

} // namespace pnpreg::cli
