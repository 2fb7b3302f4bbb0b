#pragma once

#include "sensorplan/dynamics.hpp"
#include "sensorplan/filter.hpp"
#include "sensorplan/grid.hpp"
#include "sensorplan/placement.hpp"
#include "sensorplan/planner/gamma.hpp"
#include "sensorplan/planner/planners.hpp"
#include "sensorplan/planner/reward.hpp"
#include "sensorplan/planner/types.hpp"
#include "sensorplan/random.hpp"
#include "sensorplan/harness/benchmark.hpp"
#include "sensorplan/harness/config.hpp"
#include "sensorplan/harness/episode.hpp"
#include "sensorplan/harness/experiment.hpp"
