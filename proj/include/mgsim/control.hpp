#pragma once

#include "mgsim/control/dcdc.hpp"
#include "mgsim/control/primary.hpp"
