#pragma once

#include "hsp/crp.hpp"
#include "hsp/data_matrix.hpp"
#include "hsp/error.hpp"
#include "hsp/io.hpp"
#include "hsp/metrics.hpp"
#include "hsp/model.hpp"
#include "hsp/parallel.hpp"
#include "hsp/partition.hpp"
#include "hsp/rng.hpp"
#include "hsp/sampler.hpp"
#include "hsp/shrinkage.hpp"
#include "hsp/simulate.hpp"
#include "hsp/tuning.hpp"
