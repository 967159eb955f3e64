#pragma once

#include "rabf/aircomp.hpp"
#include "rabf/analysis.hpp"
#include "rabf/core.hpp"
#include "rabf/errors.hpp"
#include "rabf/montecarlo.hpp"
#include "rabf/protocol.hpp"
#include "rabf/rng.hpp"
#include "rabf/selection.hpp"
