#ifndef PAIRSIM_PAIRSIM_HPP
#define PAIRSIM_PAIRSIM_HPP

#include "pairsim/analysis.hpp"
#include "pairsim/budget.hpp"
#include "pairsim/constants.hpp"
#include "pairsim/errors.hpp"
#include "pairsim/events.hpp"
#include "pairsim/phaselock.hpp"
#include "pairsim/polarization.hpp"
#include "pairsim/presets.hpp"
#include "pairsim/rng.hpp"
#include "pairsim/spectral.hpp"
#include "pairsim/textio.hpp"

#endif  // PAIRSIM_PAIRSIM_HPP
