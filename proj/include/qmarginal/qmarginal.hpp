#pragma once

#include "numerics.hpp"
#include "hilbert.hpp"
#include "constraint_system.hpp"
#include "marginal.hpp"
#include "random.hpp"
#include "reduce.hpp"
#include "sector.hpp"
#include "channels.hpp"
#include "gallery.hpp"
