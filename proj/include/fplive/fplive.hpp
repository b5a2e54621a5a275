#pragma once

// Umbrella header for the fplive fingerprint liveness detection library.

#include "fplive/blocks.hpp"
#include "fplive/common.hpp"
#include "fplive/eval.hpp"
#include "fplive/features.hpp"
#include "fplive/forest.hpp"
#include "fplive/image.hpp"
#include "fplive/manifest.hpp"
#include "fplive/pipeline.hpp"
#include "fplive/select.hpp"
#include "fplive/synth.hpp"
