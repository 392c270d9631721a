#pragma once

#include "twinmatch/alignment.hpp"
#include "twinmatch/digamma.hpp"
#include "twinmatch/errors.hpp"
#include "twinmatch/estimator.hpp"
#include "twinmatch/json_io.hpp"
#include "twinmatch/knn.hpp"
#include "twinmatch/losses.hpp"
#include "twinmatch/matrix.hpp"
#include "twinmatch/scene_io.hpp"
#include "twinmatch/synth.hpp"
#include "twinmatch/trajectory.hpp"
#include "twinmatch/twins.hpp"
