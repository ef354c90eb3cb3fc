#pragma once

#include "webrel/config.hpp"
#include "webrel/crack_occurrence.hpp"
#include "webrel/errors.hpp"
#include "webrel/first_passage.hpp"
#include "webrel/fracture_mechanics.hpp"
#include "webrel/normal.hpp"
#include "webrel/parallel.hpp"
#include "webrel/path_oracle.hpp"
#include "webrel/random.hpp"
#include "webrel/reliability.hpp"
#include "webrel/roots.hpp"
#include "webrel/special_functions.hpp"
#include "webrel/stochastic_tension.hpp"
#include "webrel/sweep.hpp"
#include "webrel/validation.hpp"
