#pragma once

// Umbrella header.

#include "mbe/config.hpp"
#include "mbe/dynamics.hpp"
#include "mbe/eigen.hpp"
#include "mbe/equilibria.hpp"
#include "mbe/errors.hpp"
#include "mbe/experiments.hpp"
#include "mbe/integrator.hpp"
#include "mbe/io.hpp"
#include "mbe/linalg.hpp"
#include "mbe/model.hpp"
#include "mbe/parallel.hpp"
#include "mbe/quadrature.hpp"
#include "mbe/report.hpp"
#include "mbe/trig_series.hpp"
