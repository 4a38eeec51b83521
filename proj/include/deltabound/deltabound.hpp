#pragma once

#include "deltabound/attack.hpp"
#include "deltabound/bench.hpp"
#include "deltabound/bench_config.hpp"
#include "deltabound/config_io.hpp"
#include "deltabound/dataset.hpp"
#include "deltabound/distance_eval.hpp"
#include "deltabound/errors.hpp"
#include "deltabound/model_io.hpp"
#include "deltabound/model_spec.hpp"
#include "deltabound/oracle.hpp"
#include "deltabound/random.hpp"
#include "deltabound/sampling.hpp"
#include "deltabound/update_probability.hpp"
#include "deltabound/toy2d.hpp"
#include "deltabound/trainers.hpp"
#include "deltabound/vector_ops.hpp"
