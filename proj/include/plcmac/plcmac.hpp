#ifndef PLCMAC_PLCMAC_HPP
#define PLCMAC_PLCMAC_HPP

#include "plcmac/config.hpp"
#include "plcmac/da_baseline.hpp"
#include "plcmac/dynamics.hpp"
#include "plcmac/equilibrium.hpp"
#include "plcmac/roots.hpp"
#include "plcmac/simulator.hpp"
#include "plcmac/stage_math.hpp"

#endif
