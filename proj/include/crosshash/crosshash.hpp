// crosshash.hpp — umbrella header.
#pragma once

#include "crosshash/datagen.hpp"
#include "crosshash/errors.hpp"
#include "crosshash/evaluation.hpp"
#include "crosshash/matrix.hpp"
#include "crosshash/network.hpp"
#include "crosshash/objective.hpp"
#include "crosshash/retrieval.hpp"
#include "crosshash/rng.hpp"
#include "crosshash/training.hpp"
#include "crosshash/types.hpp"
