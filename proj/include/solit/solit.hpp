#pragma once

#include "solit/error.hpp"
#include "solit/filters.hpp"
#include "solit/rng.hpp"
#include "solit/sequence_model.hpp"
#include "solit/candidates.hpp"
#include "solit/genchi2.hpp"
#include "solit/selectors.hpp"
#include "solit/quadrature.hpp"
#include "solit/testproblems.hpp"
#include "solit/harness.hpp"
#include "solit/results.hpp"
