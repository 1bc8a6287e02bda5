#pragma once

// Convenience umbrella for the whole library.

#include "sdds/distribution.hpp"
#include "sdds/embedded_chain.hpp"
#include "sdds/generator.hpp"
#include "sdds/params.hpp"
#include "sdds/rates.hpp"
#include "sdds/simulation.hpp"
#include "sdds/solver.hpp"
#include "sdds/state_space.hpp"
