#pragma once

#include "mpe/criterion.hpp"
#include "mpe/error.hpp"
#include "mpe/geom.hpp"
#include "mpe/gravity.hpp"
#include "mpe/icp.hpp"
#include "mpe/io.hpp"
#include "mpe/motion.hpp"
#include "mpe/multiview.hpp"
#include "mpe/point_cloud.hpp"
#include "mpe/random.hpp"
#include "mpe/spatial_index.hpp"
#include "mpe/sweep.hpp"
#include "mpe/synth.hpp"
