#pragma once

#include "pdlmc/core.hpp"
#include "pdlmc/diagnostics.hpp"
#include "pdlmc/errors.hpp"
#include "pdlmc/harness.hpp"
#include "pdlmc/labeled_table.hpp"
#include "pdlmc/problems.hpp"
#include "pdlmc/random_stream.hpp"
#include "pdlmc/samplers.hpp"
#include "pdlmc/trajectory.hpp"
#include "pdlmc/trajectory_io.hpp"
