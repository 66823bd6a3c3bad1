#pragma once

#include "sctnav/errors.hpp"
#include "sctnav/geometry.hpp"
#include "sctnav/kinematics.hpp"
#include "sctnav/metrics.hpp"
#include "sctnav/pivot_table.hpp"
#include "sctnav/planner.hpp"
#include "sctnav/rollout.hpp"
#include "sctnav/spatial_hash.hpp"
#include "sctnav/worldmap.hpp"
