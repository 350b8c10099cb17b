#ifndef DUALCAL_DUALCAL_HPP
#define DUALCAL_DUALCAL_HPP

#include "dualcal/batch.hpp"
#include "dualcal/bisection.hpp"
#include "dualcal/dataset.hpp"
#include "dualcal/error.hpp"
#include "dualcal/gradcheck.hpp"
#include "dualcal/io.hpp"
#include "dualcal/loss.hpp"
#include "dualcal/metrics.hpp"
#include "dualcal/mlp.hpp"
#include "dualcal/posthoc.hpp"
#include "dualcal/random.hpp"
#include "dualcal/softmax.hpp"
#include "dualcal/statistics.hpp"
#include "dualcal/theory.hpp"
#include "dualcal/trainer.hpp"

#endif  // DUALCAL_DUALCAL_HPP
