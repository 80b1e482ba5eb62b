#pragma once

#include "beamscan/analytic.hpp"
#include "beamscan/antenna.hpp"
#include "beamscan/config.hpp"
#include "beamscan/csv.hpp"
#include "beamscan/experiments.hpp"
#include "beamscan/latency.hpp"
#include "beamscan/math/quadrature.hpp"
#include "beamscan/math/rng.hpp"
#include "beamscan/math/stats.hpp"
#include "beamscan/network.hpp"
#include "beamscan/params.hpp"
#include "beamscan/simulate.hpp"
