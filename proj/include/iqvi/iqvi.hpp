#pragma once

#include "iqvi/analysis.hpp"
#include "iqvi/core.hpp"
#include "iqvi/dynamics.hpp"
#include "iqvi/geometry.hpp"
#include "iqvi/integrate.hpp"
#include "iqvi/io.hpp"
#include "iqvi/problem.hpp"
#include "iqvi/traffic.hpp"
