#include "pnpreg/cli/config.hpp"

#include "pnpreg/denoisers.hpp"
#include "pnpreg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pnpreg::cli {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_object(const Json& j, const std::string& path, const std::set<std::string>& allowed,
                  const std::set<std::string>& required = {}) {
  if (!j.is_object())
    throw ConfigError(path, "expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k))
      throw ConfigError(join(path, k), "unknown field");
  for (const auto& k : required)
    if (!j.contains(k))
      throw ConfigError(join(path, k), "missing required field");
}

double get_number(const Json& j, const std::string& path) {
  if (!j.is_number() || !std::isfinite(j.get<double>()))
    throw ConfigError(path, "expected a finite number");
  return j.get<double>();
}

double get_positive(const Json& j, const std::string& path) {
  const double v = get_number(j, path);
  if (!(v > 0))
    throw ConfigError(path, "expected a positive number");
  return v;
}

long long get_positive_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() <= 0)
    throw ConfigError(path, "expected a positive integer");
  return j.get<long long>();
}

std::uint64_t get_seed(const Json& j, const std::string& path) {
  if (j.is_number_unsigned())
    return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0)
    return std::uint64_t(j.get<long long>());
  throw ConfigError(path, "expected a nonnegative integer");
}

bool get_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean())
    throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

std::vector<double> get_positive_list(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty())
    throw ConfigError(path, "expected a nonempty array of positive numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(get_positive(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

ProblemSpec parse_problem(const Json& j, const std::string& path) {
  check_object(j, path, {"generator", "operator", "operator_file", "x_true"});
  ProblemSpec p;
  const int sources = int(j.contains("generator")) + int(j.contains("operator")) + int(j.contains("operator_file"));
  if (sources != 1)
    throw ConfigError(path, "exactly one of generator, operator, operator_file is required");
  if (j.contains("generator")) {
    const std::string gp = join(path, "generator");
    const auto& g = j["generator"];
    check_object(g, gp, {"kind", "n", "width", "rate"}, {"kind", "n"});
    p.source = ProblemSpec::Source::Generator;
    if (!g["kind"].is_string())
      throw ConfigError(join(gp, "kind"), "expected a string");
    p.generator = g["kind"].get<std::string>();
    p.n = Index(get_positive_int(g["n"], join(gp, "n")));
    if (p.generator == "identity") {
      if (g.contains("width") || g.contains("rate"))
        throw ConfigError(gp, "identity takes only n");
    } else if (p.generator == "gaussian-blur") {
      if (!g.contains("width"))
        throw ConfigError(join(gp, "width"), "missing required field");
      if (g.contains("rate"))
        throw ConfigError(join(gp, "rate"), "unknown field for gaussian-blur");
      p.width = get_positive(g["width"], join(gp, "width"));
    } else if (p.generator == "subsample") {
      if (!g.contains("rate"))
        throw ConfigError(join(gp, "rate"), "missing required field");
      if (g.contains("width"))
        throw ConfigError(join(gp, "width"), "unknown field for subsample");
      p.rate = get_positive(g["rate"], join(gp, "rate"));
      if (p.rate > 1)
        throw ConfigError(join(gp, "rate"), "must lie in (0, 1]");
    } else {
      throw ConfigError(join(gp, "kind"), "expected \"identity\", \"gaussian-blur\" or \"subsample\"");
    }
  } else if (j.contains("operator")) {
    p.source = ProblemSpec::Source::Operator;
    p.operator_json = j["operator"];
    operator_from_json(p.operator_json, join(path, "operator"));
  } else {
    p.source = ProblemSpec::Source::OperatorFile;
    if (!j["operator_file"].is_string())
      throw ConfigError(join(path, "operator_file"), "expected a path string");
    p.operator_file = j["operator_file"].get<std::string>();
  }

  if (j.contains("x_true")) {
    const auto& x = j["x_true"];
    const std::string xp = join(path, "x_true");
    if (x == "random") {
      p.x_true.kind = XTrueSpec::Kind::Random;
    } else if (x == "zero") {
      p.x_true.kind = XTrueSpec::Kind::Zero;
    } else if (x.is_array()) {
      p.x_true.kind = XTrueSpec::Kind::Explicit;
      p.x_true.values = vector_from_json(x, xp);
    } else if (x.is_object()) {
      check_object(x, xp, {"kind", "norm"}, {"kind"});
      if (x["kind"] != "random")
        throw ConfigError(join(xp, "kind"), "expected \"random\"");
      if (x.contains("norm"))
        p.x_true.norm = get_positive(x["norm"], join(xp, "norm"));
    } else {
      throw ConfigError(xp, "expected \"random\", \"zero\", {kind, norm} or an array of numbers");
    }
  }
  return p;
}

} // namespace

DenoiserSpec parse_denoiser(const Json& j, const std::string& path) {
  check_object(j, path, {"family", "params", "scaling"}, {"family"});
  DenoiserSpec d;
  if (!j["family"].is_string())
    throw ConfigError(join(path, "family"), "expected a string");
  d.family = j["family"].get<std::string>();
  const Json params = j.contains("params") ? j["params"] : Json::object();
  const std::string pp = join(path, "params");

  if (d.family == "soft-threshold" || d.family == "hard-threshold") {
    check_object(params, pp, {});
  } else if (d.family == "prox-quadratic") {
    check_object(params, pp, {"a", "step"});
    if (params.contains("a"))
      d.a = get_positive(params["a"], join(pp, "a"));
    if (params.contains("step"))
      d.step = get_positive(params["step"], join(pp, "step"));
  } else if (d.family == "filter") {
    check_object(params, pp, {"basis", "weights"});
    if (params.contains("basis")) {
      if (params["basis"] != "identity" && params["basis"] != "dct")
        throw ConfigError(join(pp, "basis"), "expected \"identity\" or \"dct\"");
      d.basis = params["basis"].get<std::string>();
    }
    if (params.contains("weights")) {
      const auto& w = params["weights"];
      if (w == "linear" || w == "uniform") {
        d.weights_kind = w.get<std::string>();
      } else if (w.is_array()) {
        d.weights_kind = "explicit";
        d.weights = vector_from_json(w, join(pp, "weights"));
        if (d.weights.size() == 0 || !(d.weights.minCoeff() > 0))
          throw ConfigError(join(pp, "weights"), "weights must be positive");
      } else {
        throw ConfigError(join(pp, "weights"), "expected \"linear\", \"uniform\" or an array of positive numbers");
      }
    }
  } else if (d.family == "causal") {
    check_object(params, pp, {"tail_tol"});
    if (params.contains("tail_tol")) {
      d.tail_tol = get_positive(params["tail_tol"], join(pp, "tail_tol"));
      if (d.tail_tol >= 1)
        throw ConfigError(join(pp, "tail_tol"), "must lie in (0, 1)");
    }
  } else if (d.family == "scaled") {
    check_object(params, pp, {"base"}, {"base"});
    d.base = std::make_shared<DenoiserSpec>(parse_denoiser(params["base"], join(pp, "base")));
  } else {
    throw ConfigError(join(path, "family"), "expected one of soft-threshold, hard-threshold, scaled, "
                                            "prox-quadratic, filter, causal");
  }

  if (j.contains("scaling")) {
    const auto& s = j["scaling"];
    const std::string sp = join(path, "scaling");
    check_object(s, sp, {"rule"});
    if (s.contains("rule") && !s["rule"].is_null()) {
      if (s["rule"] != "one-minus-lambda")
        throw ConfigError(join(sp, "rule"), "expected \"one-minus-lambda\" or null");
      d.scaling = s["rule"].get<std::string>();
    }
  }
  if (d.family == "scaled" && !d.scaling)
    d.scaling = "one-minus-lambda";
  return d;
}

std::string DenoiserSpec::describe() const {
  std::string s = family == "scaled" && base ? base->describe() : family;
  if (scaling)
    s = "scaled(" + s + "," + *scaling + ")";
  return s;
}

LimitFamily DenoiserSpec::limit_family() const {
  if (family == "prox-quadratic" && !scaling)
    return LimitFamily::Quadratic;
  return LimitFamily::Other;
}

Denoiserd build_denoiser(const DenoiserSpec& spec, Index dim, double step) {
  Denoiserd d = [&]() -> Denoiserd {
    if (spec.family == "soft-threshold")
      return soft_threshold_family<double>(step);
    if (spec.family == "hard-threshold")
      return hard_threshold_family<double>();
    if (spec.family == "prox-quadratic")
      return prox_quadratic_family<double>(spec.a, spec.step.value_or(step));
    if (spec.family == "causal")
      return causal_denoiser<double>(spec.tail_tol);
    if (spec.family == "scaled")
      return build_denoiser(*spec.base, dim, step);
    // filter
    const auto u = spec.basis == "dct" ? orthonormal_dct<double>(dim) : LinearOperatord::identity(dim);
    Vectord w(dim);
    if (spec.weights_kind == "uniform")
      w.setOnes();
    else if (spec.weights_kind == "linear")
      w = Vectord::LinSpaced(dim, 1.0, double(dim));
    else if (spec.weights.size() != dim)
      throw ConfigError("denoiser.params.weights", "expected " + std::to_string(dim) + " weights");
    else
      w = spec.weights;
    return filter_denoiser<double>(
        u, [w](double l) -> Vectord { return (1.0 + l * w.array()).inverse().matrix(); }, "filter");
  }();
  if (spec.scaling) {
    try {
      d = scale_denoiser(d, one_minus_lambda<double>());
    } catch (const DomainError& e) {
      throw ConfigError("denoiser.scaling", e.what());
    }
  }
  return d;
}

ExperimentConfig parse_config(const Json& j, const std::string& command, std::optional<std::uint64_t> seed_override) {
  if (std::find(command_names().begin(), command_names().end(), command) == command_names().end())
    throw ConfigError("command", "unknown command '" + command + "'");
  check_object(j, "",
               {"command", "seed", "seeds", "problem", "denoiser", "solver", "tolerances", "certify", "stability",
                "M", "delta_sequence", "parameter_choice", "warm_start"},
               {"denoiser"});
  ExperimentConfig c;
  c.command = command;
  if (j.contains("command")) {
    if (!j["command"].is_string() || j["command"].get<std::string>() != command)
      throw ConfigError("command", "config is for a different command than '" + command + "'");
  }
  if (j.contains("seed"))
    c.seed = get_seed(j["seed"], "seed");
  c.denoiser = parse_denoiser(j["denoiser"], "denoiser");

  if (j.contains("problem"))
    c.problem = parse_problem(j["problem"], "problem");
  else if (command != "certify-denoiser")
    throw ConfigError("problem", "missing required field");

  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_object(s, "solver", {"lambda", "step", "max_iter", "admm"});
    if (s.contains("lambda"))
      c.solver.lambda = get_positive(s["lambda"], "solver.lambda");
    if (s.contains("step") && !s["step"].is_null())
      c.solver.step = get_positive(s["step"], "solver.step");
    if (s.contains("max_iter"))
      c.solver.max_iter = int(std::min<long long>(get_positive_int(s["max_iter"], "solver.max_iter"), 2000000000LL));
    if (s.contains("admm"))
      c.solver.admm = get_bool(s["admm"], "solver.admm");
  }
  if (command == "solve" && !c.solver.lambda)
    throw ConfigError("solver.lambda", "missing required field");

  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    check_object(t, "tolerances", {"solver", "characterize"});
    if (t.contains("solver"))
      c.solver.tol = get_positive(t["solver"], "tolerances.solver");
    if (t.contains("characterize"))
      c.study.characterize_tol = get_positive(t["characterize"], "tolerances.characterize");
  }

  if (j.contains("certify")) {
    const auto& s = j["certify"];
    check_object(s, "certify", {"lambdas", "dim", "pairs", "probes", "samples", "radius"});
    if (s.contains("lambdas"))
      c.certify.lambdas = get_positive_list(s["lambdas"], "certify.lambdas");
    if (s.contains("dim"))
      c.certify.dim = Index(get_positive_int(s["dim"], "certify.dim"));
    if (s.contains("pairs"))
      c.certify.pairs = int(get_positive_int(s["pairs"], "certify.pairs"));
    if (s.contains("probes"))
      c.certify.probes = Index(get_positive_int(s["probes"], "certify.probes"));
    if (s.contains("samples"))
      c.certify.samples = Index(get_positive_int(s["samples"], "certify.samples"));
    if (s.contains("radius"))
      c.certify.radius = get_positive(s["radius"], "certify.radius");
  }
  if (j.contains("stability")) {
    const auto& s = j["stability"];
    check_object(s, "stability", {"lambdas", "pairs", "noise"});
    if (s.contains("lambdas"))
      c.stability.lambdas = get_positive_list(s["lambdas"], "stability.lambdas");
    if (s.contains("pairs"))
      c.stability.pairs = int(get_positive_int(s["pairs"], "stability.pairs"));
    if (s.contains("noise"))
      c.stability.noise = get_positive(s["noise"], "stability.noise");
  }
  if (j.contains("M"))
    c.study.M = get_positive(j["M"], "M");
  if (j.contains("delta_sequence")) {
    const auto& d = j["delta_sequence"];
    if (d.is_array()) {
      c.study.deltas = get_positive_list(d, "delta_sequence");
    } else {
      check_object(d, "delta_sequence", {"kind", "K"}, {"kind", "K"});
      if (d["kind"] != "dyadic")
        throw ConfigError("delta_sequence.kind", "expected \"dyadic\"");
      c.study.deltas = ConvergenceStudy<double>::dyadic_deltas(int(get_positive_int(d["K"], "delta_sequence.K")));
    }
    if (c.study.deltas.size() < 2)
      throw ConfigError("delta_sequence", "need at least two noise levels");
  }
  if (j.contains("parameter_choice")) {
    const auto& p = j["parameter_choice"];
    check_object(p, "parameter_choice", {"lambda_min", "lambda_max"});
    if (p.contains("lambda_min"))
      c.study.lambda_min = get_positive(p["lambda_min"], "parameter_choice.lambda_min");
    if (p.contains("lambda_max"))
      c.study.lambda_max = get_positive(p["lambda_max"], "parameter_choice.lambda_max");
    if (!(c.study.lambda_max > c.study.lambda_min))
      throw ConfigError("parameter_choice", "lambda_max must exceed lambda_min");
  }
  if (j.contains("warm_start"))
    c.study.warm_start = get_bool(j["warm_start"], "warm_start");
  if (j.contains("seeds")) {
    const auto& s = j["seeds"];
    if (!s.is_array() || s.empty())
      throw ConfigError("seeds", "expected a nonempty array of nonnegative integers");
    for (std::size_t i = 0; i < s.size(); ++i)
      c.study.seeds.push_back(get_seed(s[i], "seeds[" + std::to_string(i) + "]"));
  }
  if (seed_override) {
    c.seed = *seed_override;
    c.study.seeds.clear();
  }
  if (c.study.seeds.empty())
    c.study.seeds.push_back(c.seed);
  return c;
}

} // namespace pnpreg::cli
