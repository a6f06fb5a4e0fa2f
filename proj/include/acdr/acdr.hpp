#pragma once

#include "acdr/accounting.hpp"
#include "acdr/baseline.hpp"
#include "acdr/error.hpp"
#include "acdr/lp_format.hpp"
#include "acdr/markov.hpp"
#include "acdr/milp.hpp"
#include "acdr/parallel.hpp"
#include "acdr/report.hpp"
#include "acdr/rng.hpp"
#include "acdr/robust.hpp"
#include "acdr/scenario.hpp"
#include "acdr/scenario_io.hpp"
#include "acdr/solver.hpp"
#include "acdr/thermal.hpp"

namespace acdr {
inline constexpr const char* kVersion = "0.1.0";
}
