#pragma once

#include "pnpreg/cli/io.hpp"
#include "pnpreg/denoiser.hpp"
#include "pnpreg/harness.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pnpreg::cli {

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"certify-denoiser", "solve", "stability", "convergence-study",
                                              "characterize-limit"};
  return names;
}

struct XTrueSpec {
  enum class Kind { Random, Zero, Explicit };
  Kind kind = Kind::Random;
  double norm = 1; ///< norm of the random draw
  Vectord values;
};

struct ProblemSpec {
  enum class Source { Generator, Operator, OperatorFile };
  Source source = Source::Generator;
  std::string generator; ///< identity, gaussian-blur, subsample
  Index n = 0;
  double width = 0;
  double rate = 0;
  Json operator_json;
  std::string operator_file;
  XTrueSpec x_true;
};

struct DenoiserSpec {
  std::string family;
  std::optional<std::string> scaling;
  double a = 1;                       ///< prox-quadratic
  std::optional<double> step;         ///< prox-quadratic; the solver step when absent
  std::string basis = "identity";     ///< filter: identity or dct
  std::string weights_kind = "linear";///< filter: linear, uniform or explicit
  Vectord weights;                    ///< filter, explicit weights
  double tail_tol = 1e-14;            ///< causal
  std::shared_ptr<DenoiserSpec> base; ///< scaled

  std::string describe() const;
  LimitFamily limit_family() const;
};

/// `dim` sizes the filter basis; `step` is folded into prox-quadratic unless the spec fixes it.
Denoiserd build_denoiser(const DenoiserSpec& spec, Index dim, double step);

struct SolverSpec {
  std::optional<double> lambda;
  std::optional<double> step;
  double tol = 1e-10;
  int max_iter = 2000000;
  bool admm = true;
};

struct CertifySpec {
  std::vector<double> lambdas = default_lambda_grid();
  Index dim = 16;
  int pairs = 200;
  Index probes = 20;
  Index samples = 512;
  double radius = 1;
};

struct StabilitySpec {
  std::vector<double> lambdas{0.3, 0.1, 0.03};
  int pairs = 10;
  double noise = 0.1; ///< ||y1 - y2|| scale of the random perturbations
};

struct StudySpec {
  double M = 1;
  std::vector<double> deltas = ConvergenceStudy<double>::dyadic_deltas(12);
  std::vector<std::uint64_t> seeds;
  bool warm_start = true;
  double lambda_min = 1e-12;
  double lambda_max = 1e3;
  double characterize_tol = 1e-3;
};

struct ExperimentConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::optional<ProblemSpec> problem;
  DenoiserSpec denoiser;
  SolverSpec solver;
  CertifySpec certify;
  StabilitySpec stability;
  StudySpec study;
};

/// Validates `j` for `command`, rejecting unknown fields. Errors name the
/// offending field path. `seed_override` replaces both `seed` and `seeds`.
ExperimentConfig parse_config(const Json& j, const std::string& command,
                              std::optional<std::uint64_t> seed_override = std::nullopt);

DenoiserSpec parse_denoiser(const Json& j, const std::string& path);

} // namespace pnpreg::cli
