// fgrlab.hpp: Umbrella header

#pragma once

#include "fgrlab/bixon_jortner.hpp"
#include "fgrlab/excitation.hpp"
#include "fgrlab/fitting.hpp"
#include "fgrlab/lindblad.hpp"
#include "fgrlab/model.hpp"
#include "fgrlab/rmm.hpp"
#include "fgrlab/stochastic.hpp"
#include "fgrlab/version.hpp"
