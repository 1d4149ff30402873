#pragma once

#include "analysis.hpp"
#include "coefficients.hpp"
#include "config.hpp"
#include "density.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "grid.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "oracles.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "statistics.hpp"
#include "unraveling.hpp"
