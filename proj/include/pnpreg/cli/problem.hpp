#pragma once

#include "pnpreg/cli/config.hpp"

#include <cstdint>
#include <filesystem>

namespace pnpreg::cli {

struct GeneratedProblem {
  LinearOperatord op;
  Vectord x_true;
  Vectord y; ///< exactly A x_true
  std::string description;
};

/// Normalized Gaussian kernel exp(-m^2 / (2 width^2)) on |m| <= ceil(3 width),
/// applied on the zero-padded window, so ||A|| <= 1.
LinearOperatord gaussian_blur(Index n, double width);

/// Keeps round(n rate) evenly spaced coordinates: row i picks column floor(i n / m).
LinearOperatord subsample(Index n, double rate);

/// Builds the operator and draws x_true from stream 0 of `seed`.
/// Relative operator files resolve against `base_dir`.
GeneratedProblem generate_problem(const ProblemSpec& spec, std::uint64_t seed,
                                  const std::filesystem::path& base_dir = {});

Json problem_to_json(const GeneratedProblem& p);

} // namespace pnpreg::cli
