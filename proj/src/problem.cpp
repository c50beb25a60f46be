#include "pnpreg/cli/problem.hpp"

#include "pnpreg/random.hpp"

#include <cmath>

namespace pnpreg::cli {

LinearOperatord gaussian_blur(Index n, double width) {
  if (n <= 0 || !(width > 0))
    throw DomainError("gaussian_blur: n and width must be positive");
  const Index half = Index(std::ceil(3 * width));
  Vectord taps(2 * half + 1);
  for (Index m = -half; m <= half; ++m)
    taps(m + half) = std::exp(-double(m * m) / (2 * width * width));
  taps /= taps.sum();
  return LinearOperatord::convolution(taps, n, ConvolutionMode::TruncatedZ, -half);
}

LinearOperatord subsample(Index n, double rate) {
  if (n <= 0 || !(rate > 0) || rate > 1)
    throw DomainError("subsample: need n > 0 and rate in (0, 1]");
  const Index m = std::max<Index>(1, Index(std::llround(double(n) * rate)));
  Matrixd a = Matrixd::Zero(m, n);
  for (Index i = 0; i < m; ++i)
    a(i, (i * n) / m) = 1;
  return LinearOperatord::dense(std::move(a));
}

GeneratedProblem generate_problem(const ProblemSpec& spec, std::uint64_t seed, const std::filesystem::path& base_dir) {
  auto op = [&]() -> LinearOperatord {
    switch (spec.source) {
    case ProblemSpec::Source::Generator:
      if (spec.generator == "identity")
        return LinearOperatord::identity(spec.n);
      if (spec.generator == "gaussian-blur")
        return gaussian_blur(spec.n, spec.width);
      return subsample(spec.n, spec.rate);
    case ProblemSpec::Source::Operator:
      return operator_from_json(spec.operator_json, "problem.operator");
    default: {
      std::filesystem::path file = spec.operator_file;
      if (file.is_relative() && !base_dir.empty())
        file = base_dir / file;
      const Json j = read_json_file(file);
      // Accept either a bare operator or a problem.json written by this tool.
      if (j.is_object() && j.contains("operator"))
        return operator_from_json(j["operator"], "problem.operator_file:operator");
      return operator_from_json(j, "problem.operator_file");
    }
    }
  }();

  GeneratedProblem p{op, Vectord(), Vectord(), ""};
  const Index n = op.in_dim();
  switch (spec.x_true.kind) {
  case XTrueSpec::Kind::Zero:
    p.x_true = Vectord::Zero(n);
    break;
  case XTrueSpec::Kind::Explicit:
    if (spec.x_true.values.size() != n)
      throw ConfigError("problem.x_true", "expected " + std::to_string(n) + " entries");
    p.x_true = spec.x_true.values;
    break;
  default: {
    Rng rng = make_rng(seed, 0);
    p.x_true = sphere_vector<double>(rng, n, spec.x_true.norm);
  }
  }
  p.y = apply(p.op, p.x_true);
  switch (spec.source) {
  case ProblemSpec::Source::Generator:
    p.description = spec.generator + "(" + std::to_string(spec.n) +
                    (spec.generator == "gaussian-blur" ? ", width=" + Json(spec.width).dump()
                     : spec.generator == "subsample"   ? ", rate=" + Json(spec.rate).dump()
                                                       : "") +
                    ")";
    break;
  case ProblemSpec::Source::Operator:
    p.description = "inline operator";
    break;
  default:
    p.description = "operator file " + spec.operator_file;
  }
  return p;
}

Json problem_to_json(const GeneratedProblem& p) {
  Json j;
  j["description"] = p.description;
  j["operator"] = operator_to_json(p.op);
  j["x_true"] = vector_to_json(p.x_true);
  j["y"] = vector_to_json(p.y);
  return j;
}

} // namespace pnpreg::cli
