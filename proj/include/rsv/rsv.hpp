#pragma once

#include "rsv/bench.hpp"
#include "rsv/csv.hpp"
#include "rsv/data_pipeline.hpp"
#include "rsv/diagnostics.hpp"
#include "rsv/integrator.hpp"
#include "rsv/model.hpp"
#include "rsv/parallel.hpp"
#include "rsv/rng.hpp"
#include "rsv/sampler.hpp"
