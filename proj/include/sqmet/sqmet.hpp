#pragma once

// Umbrella header for the squeezed-probe interferometry toolkit.

#include "sqmet/adaptive.hpp"
#include "sqmet/builtin.hpp"
#include "sqmet/estimator.hpp"
#include "sqmet/gaussian.hpp"
#include "sqmet/metrology.hpp"
#include "sqmet/netdsl.hpp"
#include "sqmet/rng.hpp"
#include "sqmet/unitary.hpp"
#include "sqmet/version.hpp"
