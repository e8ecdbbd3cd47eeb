#pragma once

#include "hcn/baselines.hpp"
#include "hcn/core.hpp"
#include "hcn/costmodel.hpp"
#include "hcn/cubic_solver.hpp"
#include "hcn/estimators.hpp"
#include "hcn/optimizer.hpp"
#include "hcn/problems.hpp"
#include "hcn/stationarity.hpp"
#include "hcn/trace.hpp"
#include "hcn/verify/audit.hpp"
#include "hcn/verify/rate.hpp"
