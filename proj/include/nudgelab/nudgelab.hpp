#pragma once

#include "config.hpp"
#include "experiment.hpp"
#include "field.hpp"
#include "harness.hpp"
#include "integrator.hpp"
#include "io.hpp"
#include "models.hpp"
#include "noise.hpp"
#include "observation.hpp"
#include "rng.hpp"
#include "spectral.hpp"
