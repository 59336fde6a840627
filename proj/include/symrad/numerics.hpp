#pragma once

#include "symrad/numerics/linalg.hpp"
#include "symrad/numerics/special_functions.hpp"
