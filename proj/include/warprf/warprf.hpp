#pragma once

// Umbrella header.

#include "warprf/active.hpp"
#include "warprf/backend.hpp"
#include "warprf/camera.hpp"
#include "warprf/cloud.hpp"
#include "warprf/config.hpp"
#include "warprf/core.hpp"
#include "warprf/degrade.hpp"
#include "warprf/image_io.hpp"
#include "warprf/metrics.hpp"
#include "warprf/results.hpp"
#include "warprf/rng.hpp"
#include "warprf/scene.hpp"
#include "warprf/uncertainty.hpp"
#include "warprf/version.hpp"
#include "warprf/viewgen.hpp"
#include "warprf/voxel.hpp"
#include "warprf/warp.hpp"
