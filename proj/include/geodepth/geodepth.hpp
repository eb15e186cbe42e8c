#pragma once

// Umbrella header for the geodepth library.

#include "geodepth/core.hpp"
#include "geodepth/samplers.hpp"
#include "geodepth/quantile.hpp"
#include "geodepth/depth.hpp"
#include "geodepth/asymptotics.hpp"
#include "geodepth/oracle.hpp"
#include "geodepth/io.hpp"
