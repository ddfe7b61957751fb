#pragma once

#include "mhsm/geometry.hpp"
#include "mhsm/kdtree.hpp"
#include "mhsm/scan.hpp"
#include "mhsm/hypothesis.hpp"
#include "mhsm/clustering.hpp"
#include "mhsm/baselines.hpp"
#include "mhsm/simulator.hpp"
#include "mhsm/carmen.hpp"
#include "mhsm/bench.hpp"
