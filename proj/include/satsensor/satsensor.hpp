#pragma once

#include "satsensor/errors.hpp"
#include "satsensor/units.hpp"
#include "satsensor/hurwitz_zeta.hpp"
#include "satsensor/scattering.hpp"
#include "satsensor/numerics.hpp"
#include "satsensor/metrology.hpp"
#include "satsensor/rng.hpp"
#include "satsensor/estimation.hpp"
#include "satsensor/optimizer.hpp"
