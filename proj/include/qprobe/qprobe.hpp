#pragma once

#include "qprobe/brute_force.hpp"
#include "qprobe/error_analysis.hpp"
#include "qprobe/errors.hpp"
#include "qprobe/estimator.hpp"
#include "qprobe/format.hpp"
#include "qprobe/headway.hpp"
#include "qprobe/pmf.hpp"
#include "qprobe/reference_values.hpp"
#include "qprobe/rng.hpp"
#include "qprobe/signal_sim.hpp"
