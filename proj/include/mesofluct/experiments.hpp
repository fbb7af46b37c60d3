#pragma once

#include "mesofluct/experiments/config.hpp"
#include "mesofluct/experiments/result.hpp"
#include "mesofluct/experiments/runs.hpp"
