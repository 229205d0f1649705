#pragma once

#include "agent.hpp"
#include "allocation.hpp"
#include "bounds.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "dynamics.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "means_table.hpp"
#include "optimizer.hpp"
#include "random.hpp"
#include "reward_model.hpp"
#include "schedule.hpp"
