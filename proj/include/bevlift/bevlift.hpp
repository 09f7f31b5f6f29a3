#pragma once

// Height-based camera-to-BEV geometry engine: camera frames, range
// discretization, pixel lifting, voxel pooling, feature fusion, and the
// calibration-robustness analyses.

#include "bevlift/bev_grid.hpp"
#include "bevlift/binning.hpp"
#include "bevlift/config.hpp"
#include "bevlift/container.hpp"
#include "bevlift/error.hpp"
#include "bevlift/feature_map.hpp"
#include "bevlift/fusion.hpp"
#include "bevlift/geometry.hpp"
#include "bevlift/lifting.hpp"
#include "bevlift/rng.hpp"
#include "bevlift/robustness.hpp"
#include "bevlift/scene.hpp"
#include "bevlift/serialize.hpp"
