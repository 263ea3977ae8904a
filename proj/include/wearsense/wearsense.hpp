#pragma once

#include "wearsense/analytics.hpp"
#include "wearsense/frame_codec.hpp"
#include "wearsense/identity.hpp"
#include "wearsense/io.hpp"
#include "wearsense/mac_address.hpp"
#include "wearsense/presence_tracker.hpp"
#include "wearsense/scenario_engine.hpp"
#include "wearsense/scripts.hpp"
#include "wearsense/sim_harness.hpp"
#include "wearsense/taxonomy.hpp"
