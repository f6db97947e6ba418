#pragma once

#include "stocbo/approximation.hpp"
#include "stocbo/dynamics.hpp"
#include "stocbo/ensemble.hpp"
#include "stocbo/errors.hpp"
#include "stocbo/experiments.hpp"
#include "stocbo/metrics.hpp"
#include "stocbo/objectives.hpp"
#include "stocbo/parallel.hpp"
#include "stocbo/params.hpp"
#include "stocbo/report.hpp"
#include "stocbo/seed.hpp"
