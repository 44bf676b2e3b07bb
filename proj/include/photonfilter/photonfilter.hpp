#pragma once

#include "analysis.hpp"
#include "field.hpp"
#include "filtering.hpp"
#include "propagator.hpp"
#include "pulses.hpp"
#include "util.hpp"
#include "version.hpp"
