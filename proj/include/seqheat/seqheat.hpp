#pragma once

#include "seqheat/chain.hpp"
#include "seqheat/collision.hpp"
#include "seqheat/distribution_io.hpp"
#include "seqheat/enumeration.hpp"
#include "seqheat/fluctuation.hpp"
#include "seqheat/heat_distribution.hpp"
#include "seqheat/markov.hpp"
#include "seqheat/model.hpp"
#include "seqheat/model_io.hpp"
#include "seqheat/rational.hpp"
#include "seqheat/sampler.hpp"
#include "seqheat/thermal.hpp"
