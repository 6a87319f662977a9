#pragma once

#include "kgpoison/attack_direct.hpp"
#include "kgpoison/attack_indirect.hpp"
#include "kgpoison/baselines.hpp"
#include "kgpoison/checkpoint.hpp"
#include "kgpoison/config.hpp"
#include "kgpoison/error.hpp"
#include "kgpoison/evaluator.hpp"
#include "kgpoison/experiment.hpp"
#include "kgpoison/model.hpp"
#include "kgpoison/paths.hpp"
#include "kgpoison/report.hpp"
#include "kgpoison/rng.hpp"
#include "kgpoison/trainer.hpp"
#include "kgpoison/triple_io.hpp"
#include "kgpoison/triple_store.hpp"
#include "kgpoison/vocabulary.hpp"
