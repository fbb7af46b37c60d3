#pragma once

#include "mesofluct/cumulants.hpp"
#include "mesofluct/error.hpp"
#include "mesofluct/experiments.hpp"
#include "mesofluct/hankel.hpp"
#include "mesofluct/jacobi.hpp"
#include "mesofluct/linalg.hpp"
#include "mesofluct/ope_sampler.hpp"
#include "mesofluct/resolvent.hpp"
#include "mesofluct/test_function.hpp"
