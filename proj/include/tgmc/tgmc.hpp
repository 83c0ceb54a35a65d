#pragma once

#include "tgmc/boundary_mps.hpp"
#include "tgmc/decomposition.hpp"
#include "tgmc/error.hpp"
#include "tgmc/kbd_sampler.hpp"
#include "tgmc/lattice.hpp"
#include "tgmc/metropolis.hpp"
#include "tgmc/mps.hpp"
#include "tgmc/observables.hpp"
#include "tgmc/rng.hpp"
#include "tgmc/site_tensors.hpp"
#include "tgmc/tensor.hpp"
#include "tgmc/tg_sampler.hpp"
#include "tgmc/tgmh_sampler.hpp"
