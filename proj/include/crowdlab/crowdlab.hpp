#pragma once

#include "crowdlab/condorcet.hpp"
#include "crowdlab/crowd_model.hpp"
#include "crowdlab/epistemic.hpp"
#include "crowdlab/error.hpp"
#include "crowdlab/io.hpp"
#include "crowdlab/pipeline.hpp"
#include "crowdlab/quality_control.hpp"
#include "crowdlab/rng.hpp"
#include "crowdlab/scientometrics.hpp"
#include "crowdlab/stats.hpp"
#include "crowdlab/veritistic.hpp"
