#pragma once

#include "hgame/behavior_model.hpp"
#include "hgame/config.hpp"
#include "hgame/errors.hpp"
#include "hgame/estimation.hpp"
#include "hgame/features.hpp"
#include "hgame/game_core.hpp"
#include "hgame/geometry.hpp"
#include "hgame/level_game.hpp"
#include "hgame/maneuvers.hpp"
#include "hgame/parallel.hpp"
#include "hgame/pipeline.hpp"
#include "hgame/rng.hpp"
#include "hgame/scenario_io.hpp"
#include "hgame/solution_concepts.hpp"
#include "hgame/trajectory_lattice.hpp"
#include "hgame/types.hpp"
#include "hgame/utility_model.hpp"
