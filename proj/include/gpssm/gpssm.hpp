#pragma once

#include "gpssm/benchmark_systems.hpp"
#include "gpssm/equilibrium.hpp"
#include "gpssm/errors.hpp"
#include "gpssm/gp_model.hpp"
#include "gpssm/grid.hpp"
#include "gpssm/hyperparameter_search.hpp"
#include "gpssm/kernel.hpp"
#include "gpssm/model_io.hpp"
#include "gpssm/nnls.hpp"
#include "gpssm/random.hpp"
#include "gpssm/simulation.hpp"
#include "gpssm/stability.hpp"
#include "gpssm/training_set.hpp"
