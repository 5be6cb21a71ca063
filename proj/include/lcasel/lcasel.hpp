#pragma once

// Latent class analysis with swap-stepwise variable selection for
// multivariate categorical data: model fitting, BIC-based comparison of
// the competing variable-role models, simulation generators and
// partition-agreement metrics.

#include "lcasel/assoc.hpp"
#include "lcasel/dataset.hpp"
#include "lcasel/io.hpp"
#include "lcasel/lca.hpp"
#include "lcasel/logreg.hpp"
#include "lcasel/metrics.hpp"
#include "lcasel/replicate.hpp"
#include "lcasel/rng.hpp"
#include "lcasel/selector.hpp"
#include "lcasel/simgen.hpp"
