#pragma once

#include "reff/errors.hpp"
#include "reff/rng.hpp"
#include "reff/parallel.hpp"
#include "reff/qsim.hpp"
#include "reff/hamiltonians.hpp"
#include "reff/ansatz.hpp"
#include "reff/data.hpp"
#include "reff/costs.hpp"
#include "reff/bounds.hpp"
#include "reff/training.hpp"
#include "reff/evaluation.hpp"
#include "reff/verify.hpp"
