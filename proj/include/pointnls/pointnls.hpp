#pragma once

#include "pointnls/abel.hpp"
#include "pointnls/concentrated.hpp"
#include "pointnls/config.hpp"
#include "pointnls/data.hpp"
#include "pointnls/diagnostics.hpp"
#include "pointnls/error.hpp"
#include "pointnls/fft.hpp"
#include "pointnls/field.hpp"
#include "pointnls/free_flow.hpp"
#include "pointnls/grid.hpp"
#include "pointnls/history.hpp"
#include "pointnls/measure.hpp"
#include "pointnls/record.hpp"
#include "pointnls/reconstruction.hpp"
#include "pointnls/runner.hpp"
#include "pointnls/trace_solver.hpp"
