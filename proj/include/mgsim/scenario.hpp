#pragma once

#include "mgsim/scenario/artifacts.hpp"
#include "mgsim/scenario/config.hpp"
#include "mgsim/scenario/runner.hpp"
