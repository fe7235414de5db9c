#pragma once

#include "dising/cut.hpp"
#include "dising/entropy.hpp"
#include "dising/errors.hpp"
#include "dising/estimator.hpp"
#include "dising/exact.hpp"
#include "dising/instance_io.hpp"
#include "dising/magnetize.hpp"
#include "dising/matrix.hpp"
#include "dising/model.hpp"
#include "dising/mrf_estimator.hpp"
#include "dising/refine.hpp"
#include "dising/rng.hpp"
#include "dising/scalar.hpp"
#include "dising/simplex.hpp"
#include "dising/tensor.hpp"
