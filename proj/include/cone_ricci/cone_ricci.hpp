#pragma once

// Everything except the command-line front end (cli.hpp).

#include "barrier.hpp"
#include "config.hpp"
#include "error.hpp"
#include "experiments.hpp"
#include "flow.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "metric.hpp"
#include "parallel.hpp"
#include "truncation.hpp"
