#pragma once

// Umbrella header.

#include "fadnet/bench.hpp"
#include "fadnet/checkpoint.hpp"
#include "fadnet/config.hpp"
#include "fadnet/conv.hpp"
#include "fadnet/correlation.hpp"
#include "fadnet/dataset.hpp"
#include "fadnet/disparity_io.hpp"
#include "fadnet/errors.hpp"
#include "fadnet/file_util.hpp"
#include "fadnet/gradcheck.hpp"
#include "fadnet/loss.hpp"
#include "fadnet/metrics.hpp"
#include "fadnet/network.hpp"
#include "fadnet/ops.hpp"
#include "fadnet/parallel.hpp"
#include "fadnet/png.hpp"
#include "fadnet/rng.hpp"
#include "fadnet/synthetic.hpp"
#include "fadnet/tensor.hpp"
#include "fadnet/training.hpp"
#include "fadnet/warp.hpp"
