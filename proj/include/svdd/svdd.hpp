#pragma once

// Everything in one include.

#include "svdd/dataset.hpp"
#include "svdd/error.hpp"
#include "svdd/evaluation.hpp"
#include "svdd/generators.hpp"
#include "svdd/kernel.hpp"
#include "svdd/model_io.hpp"
#include "svdd/parallel.hpp"
#include "svdd/pspline.hpp"
#include "svdd/random.hpp"
#include "svdd/sampling.hpp"
#include "svdd/selector.hpp"
#include "svdd/solver.hpp"

namespace svdd {
inline constexpr const char* version_string = "1.0.0";
}  // namespace svdd
