#pragma once

#include <robinsim/analytic1d.hpp>
#include <robinsim/blverify.hpp>
#include <robinsim/coefficients.hpp>
#include <robinsim/config.hpp>
#include <robinsim/convergence.hpp>
#include <robinsim/csv.hpp>
#include <robinsim/errors.hpp>
#include <robinsim/euler1d.hpp>
#include <robinsim/euler_nd.hpp>
#include <robinsim/fpe.hpp>
#include <robinsim/harness.hpp>
#include <robinsim/histogram.hpp>
#include <robinsim/parallel.hpp>
#include <robinsim/rng.hpp>
#include <robinsim/special_functions.hpp>
