#pragma once

#include "memsfde/diagnostics.hpp"
#include "memsfde/engine.hpp"
#include "memsfde/error.hpp"
#include "memsfde/functionals.hpp"
#include "memsfde/grid.hpp"
#include "memsfde/path.hpp"
#include "memsfde/pricing.hpp"
#include "memsfde/random.hpp"
#include "memsfde/stats.hpp"
