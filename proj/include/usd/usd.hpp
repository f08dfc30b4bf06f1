#pragma once

#include "usd/errors.hpp"
#include "usd/io.hpp"
#include "usd/linalg.hpp"
#include "usd/optimize.hpp"
#include "usd/posterior.hpp"
#include "usd/povm.hpp"
#include "usd/simulate.hpp"
