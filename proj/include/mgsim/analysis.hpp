#pragma once

#include "mgsim/analysis/metrics.hpp"
