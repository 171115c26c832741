#pragma once

#include "distribution.hpp"
#include "errors.hpp"
#include "exact.hpp"
#include "heaps.hpp"
#include "montecarlo.hpp"
