#pragma once

// Umbrella header: low-rank recovery solvers, the feasible-set machinery
// they share, synthetic instance generation, the MLP compression pipeline,
// and the Monte-Carlo scaling harness.

#include "lowrank/compress.hpp"
#include "lowrank/dense_linalg.hpp"
#include "lowrank/errors.hpp"
#include "lowrank/feasible_set.hpp"
#include "lowrank/harness.hpp"
#include "lowrank/lrm_io.hpp"
#include "lowrank/matrix.hpp"
#include "lowrank/mlp.hpp"
#include "lowrank/recover_convex.hpp"
#include "lowrank/recover_rank.hpp"
#include "lowrank/recover_relu.hpp"
#include "lowrank/rng.hpp"
#include "lowrank/synth.hpp"
