#pragma once

#include "updrs/dataset.hpp"
#include "updrs/error.hpp"
#include "updrs/eval.hpp"
#include "updrs/featsel.hpp"
#include "updrs/lbfgs.hpp"
#include "updrs/linalg.hpp"
#include "updrs/lstm.hpp"
#include "updrs/mlp.hpp"
#include "updrs/preprocess.hpp"
#include "updrs/rng.hpp"
#include "updrs/stats.hpp"
#include "updrs/svr.hpp"
#include "updrs/synth.hpp"
