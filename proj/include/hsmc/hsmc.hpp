#pragma once

#include "hsmc/chain.hpp"
#include "hsmc/diagnostics.hpp"
#include "hsmc/errors.hpp"
#include "hsmc/io.hpp"
#include "hsmc/kernel_approx.hpp"
#include "hsmc/kernel_baseline.hpp"
#include "hsmc/kernel_exact.hpp"
#include "hsmc/linalg.hpp"
#include "hsmc/mnig.hpp"
#include "hsmc/rng.hpp"
#include "hsmc/run.hpp"
#include "hsmc/simulate.hpp"
