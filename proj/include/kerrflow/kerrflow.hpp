#pragma once

#include "kerrflow/campaigns.hpp"
#include "kerrflow/charts.hpp"
#include "kerrflow/error.hpp"
#include "kerrflow/flow.hpp"
#include "kerrflow/hamiltonian.hpp"
#include "kerrflow/killing.hpp"
#include "kerrflow/metric.hpp"
#include "kerrflow/null_cone.hpp"
#include "kerrflow/params.hpp"
#include "kerrflow/roots.hpp"
#include "kerrflow/tolerance.hpp"
#include "kerrflow/trapping.hpp"
