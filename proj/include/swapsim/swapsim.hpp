#pragma once

// Umbrella header for the whole library (JSON export excluded; include
// swapsim/export_json.hpp separately where the vendored json dependency is
// wanted).

#include "swapsim/csv.hpp"
#include "swapsim/error.hpp"
#include "swapsim/microdata.hpp"
#include "swapsim/rng.hpp"
#include "swapsim/risk.hpp"
#include "swapsim/simulate.hpp"
#include "swapsim/swap.hpp"
#include "swapsim/synthgen.hpp"
#include "swapsim/tabulate.hpp"
#include "swapsim/version.hpp"
