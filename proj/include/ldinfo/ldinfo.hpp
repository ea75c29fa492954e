#pragma once

#include "ldinfo/error.hpp"
#include "ldinfo/random.hpp"
#include "ldinfo/core.hpp"
#include "ldinfo/littlestone.hpp"
#include "ldinfo/parallel.hpp"
#include "ldinfo/stable.hpp"
#include "ldinfo/boost.hpp"
#include "ldinfo/info.hpp"
#include "ldinfo/affine.hpp"
