#pragma once

// Umbrella header for the spothull library (everything except the HTTP service).

#include "spothull/core_model.hpp"
#include "spothull/geometry.hpp"
#include "spothull/clustering.hpp"
#include "spothull/colorspace.hpp"
#include "spothull/regions.hpp"
#include "spothull/polygon_ops.hpp"
#include "spothull/overlay.hpp"
#include "spothull/app/config.hpp"
#include "spothull/app/pipeline.hpp"
