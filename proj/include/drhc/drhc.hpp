#pragma once

#include "drhc/core.hpp"
#include "drhc/rng.hpp"
#include "drhc/world.hpp"
#include "drhc/meshnet.hpp"
#include "drhc/costs.hpp"
#include "drhc/optimizer.hpp"
#include "drhc/bidding.hpp"
#include "drhc/agent.hpp"
#include "drhc/trial.hpp"
#include "drhc/adaptation.hpp"
#include "drhc/scenario.hpp"
#include "drhc/commands.hpp"
