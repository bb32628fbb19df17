// qtm.hpp — umbrella header

#pragma once

#include "qtm/errors.hpp"
#include "qtm/linalg.hpp"
#include "qtm/model.hpp"
#include "qtm/master_eq.hpp"
#include "qtm/evolve.hpp"
#include "qtm/diffusion.hpp"
#include "qtm/analytics.hpp"
#include "qtm/config.hpp"
#include "qtm/io.hpp"
#include "qtm/sweep.hpp"
