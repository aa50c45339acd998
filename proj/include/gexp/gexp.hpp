/// Umbrella header.
#pragma once

#include "gexp/analytic.hpp"
#include "gexp/core.hpp"
#include "gexp/experiments.hpp"
#include "gexp/gheat.hpp"
#include "gexp/lattice.hpp"
#include "gexp/parallel.hpp"
#include "gexp/quadrature.hpp"
#include "gexp/random.hpp"
