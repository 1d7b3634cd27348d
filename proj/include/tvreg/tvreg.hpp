#pragma once

// Everything except the command-line front end (tvreg/cli.hpp), which pulls
// in CLI11.

#include "tvreg/error.hpp"
#include "tvreg/eval.hpp"
#include "tvreg/grid.hpp"
#include "tvreg/io.hpp"
#include "tvreg/loss.hpp"
#include "tvreg/power_method.hpp"
#include "tvreg/random.hpp"
#include "tvreg/simdata.hpp"
#include "tvreg/solver.hpp"
#include "tvreg/tvprox.hpp"
