#pragma once

#include "iclasso/datagen.hpp"
#include "iclasso/diagnostics.hpp"
#include "iclasso/errors.hpp"
#include "iclasso/experiment.hpp"
#include "iclasso/io.hpp"
#include "iclasso/rng.hpp"
#include "iclasso/solver.hpp"
#include "iclasso/tuning.hpp"
#include "iclasso/weighted.hpp"
