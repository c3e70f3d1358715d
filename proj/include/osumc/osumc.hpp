#pragma once

#include "osumc/error.hpp"
#include "osumc/rng.hpp"
#include "osumc/linalg.hpp"
#include "osumc/glm.hpp"
#include "osumc/sampling.hpp"
#include "osumc/estimator.hpp"
#include "osumc/datagen.hpp"
#include "osumc/bench.hpp"
#include "osumc/io.hpp"
#include "osumc/config.hpp"
