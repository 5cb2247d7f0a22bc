#pragma once

// Umbrella header pulling in every module.

#include "cityadapt/adaptation.hpp"
#include "cityadapt/errors.hpp"
#include "cityadapt/flow.hpp"
#include "cityadapt/forecast.hpp"
#include "cityadapt/fusion.hpp"
#include "cityadapt/indicators.hpp"
#include "cityadapt/pod.hpp"
#include "cityadapt/raster.hpp"
#include "cityadapt/reconstruction.hpp"
#include "cityadapt/rng.hpp"
#include "cityadapt/workspace.hpp"
