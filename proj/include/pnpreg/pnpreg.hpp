#pragma once

#include "pnpreg/admissibility.hpp"
#include "pnpreg/box_ball.hpp"
#include "pnpreg/denoiser.hpp"
#include "pnpreg/denoisers.hpp"
#include "pnpreg/discrepancy.hpp"
#include "pnpreg/harness.hpp"
#include "pnpreg/linear_operator.hpp"
#include "pnpreg/random.hpp"
#include "pnpreg/solver.hpp"
#include "pnpreg/spectral.hpp"
#include "pnpreg/types.hpp"
