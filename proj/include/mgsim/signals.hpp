#pragma once

#include "mgsim/signals/filters.hpp"
#include "mgsim/signals/pll.hpp"
#include "mgsim/signals/pr.hpp"
#include "mgsim/signals/sogi.hpp"
#include "mgsim/signals/transforms.hpp"
#include "mgsim/signals/types.hpp"
