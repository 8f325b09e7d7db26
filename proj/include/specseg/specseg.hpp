#pragma once

#include "specseg/error.hpp"
#include "specseg/core.hpp"
#include "specseg/spectral.hpp"
#include "specseg/divergence.hpp"
#include "specseg/solvers.hpp"
#include "specseg/detector.hpp"
#include "specseg/simulate.hpp"
#include "specseg/evaluate.hpp"
#include "specseg/io.hpp"
