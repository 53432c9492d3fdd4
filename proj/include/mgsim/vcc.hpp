#pragma once

#include "mgsim/vcc/vcc.hpp"
