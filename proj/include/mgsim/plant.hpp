#pragma once

#include "mgsim/plant/dc_stage.hpp"
#include "mgsim/plant/network.hpp"
#include "mgsim/plant/plant.hpp"
#include "mgsim/plant/pv.hpp"
