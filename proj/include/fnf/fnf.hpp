#pragma once

#include "fnf/error.hpp"
#include "fnf/core_model.hpp"
#include "fnf/applet_catalog.hpp"
#include "fnf/filter_engine.hpp"
#include "fnf/pattern.hpp"
#include "fnf/wire.hpp"
#include "fnf/fuzz_engine.hpp"
#include "fnf/ta_platform.hpp"
#include "fnf/gateway.hpp"
#include "fnf/trace_io.hpp"
#include "fnf/analysis.hpp"
#include "fnf/experiment.hpp"
