#pragma once

#include "cfmimo/baselines.hpp"
#include "cfmimo/channel.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/harness.hpp"
#include "cfmimo/linalg.hpp"
#include "cfmimo/metrics.hpp"
#include "cfmimo/mmse_design.hpp"
#include "cfmimo/ota_ibt.hpp"
#include "cfmimo/paired_design.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/scenario.hpp"
#include "cfmimo/types.hpp"
