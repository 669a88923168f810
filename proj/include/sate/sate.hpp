#pragma once

// umbrella header: the whole library

#include "sate/bounds.hpp"
#include "sate/crossfit.hpp"
#include "sate/data.hpp"
#include "sate/dgp.hpp"
#include "sate/estimators.hpp"
#include "sate/harness.hpp"
#include "sate/influence.hpp"
#include "sate/learners.hpp"
#include "sate/math.hpp"
