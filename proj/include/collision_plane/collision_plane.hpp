#pragma once

#include "collision_plane/camera_geometry.hpp"
#include "collision_plane/epipole.hpp"
#include "collision_plane/epipole_estimation.hpp"
#include "collision_plane/error.hpp"
#include "collision_plane/io.hpp"
#include "collision_plane/motion_clustering.hpp"
#include "collision_plane/scene_simulator.hpp"
#include "collision_plane/sensitivity.hpp"
#include "collision_plane/ttc_core.hpp"
