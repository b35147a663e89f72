// Umbrella header: the whole library in one include.
#pragma once

#include "epiq/cli.hpp"
#include "epiq/formula.hpp"
#include "epiq/inference.hpp"
#include "epiq/json_io.hpp"
#include "epiq/kripke.hpp"
#include "epiq/parser.hpp"
#include "epiq/quantum.hpp"
#include "epiq/scenarios.hpp"
