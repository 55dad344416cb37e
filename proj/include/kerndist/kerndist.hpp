#pragma once

#include "kerndist/csv.hpp"
#include "kerndist/datagen.hpp"
#include "kerndist/estimators.hpp"
#include "kerndist/kernels.hpp"
#include "kerndist/linalg.hpp"
#include "kerndist/matrix.hpp"
#include "kerndist/rng.hpp"
#include "kerndist/stats.hpp"
#include "kerndist/testing.hpp"
