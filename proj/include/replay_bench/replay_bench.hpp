#pragma once

#include "replay_bench/errors.hpp"
#include "replay_bench/random.hpp"
#include "replay_bench/log.hpp"
#include "replay_bench/data.hpp"
#include "replay_bench/clt.hpp"
#include "replay_bench/nn/tensor.hpp"
#include "replay_bench/nn/architecture.hpp"
#include "replay_bench/nn/network.hpp"
#include "replay_bench/nn/losses.hpp"
#include "replay_bench/nn/adam.hpp"
#include "replay_bench/nn/checkpoint.hpp"
#include "replay_bench/nn/classifier.hpp"
#include "replay_bench/generative.hpp"
#include "replay_bench/ewc.hpp"
#include "replay_bench/replay.hpp"
#include "replay_bench/config.hpp"
#include "replay_bench/trainer.hpp"
#include "replay_bench/metrics.hpp"
#include "replay_bench/matrix.hpp"
#include "replay_bench/plot.hpp"
#include "replay_bench/report.hpp"
