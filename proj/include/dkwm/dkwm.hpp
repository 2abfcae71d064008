#pragma once

// Tight one-sided confidence bounds for empirical distribution functions:
// the Bernoulli-KL machinery, closed-form bound functions, step-function
// bands, and exact plus Monte Carlo verification of the guarantees.

#include "dkwm/types.hpp"
#include "dkwm/kl.hpp"
#include "dkwm/bounds.hpp"
#include "dkwm/bands.hpp"
#include "dkwm/rng.hpp"
#include "dkwm/simulate.hpp"
#include "dkwm/io.hpp"
