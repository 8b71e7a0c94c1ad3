#pragma once

#include "uavrf/classify.hpp"
#include "uavrf/dataset.hpp"
#include "uavrf/detector.hpp"
#include "uavrf/error.hpp"
#include "uavrf/features.hpp"
#include "uavrf/generator.hpp"
#include "uavrf/harness.hpp"
#include "uavrf/link_budget.hpp"
#include "uavrf/nca.hpp"
#include "uavrf/signal.hpp"
#include "uavrf/transient.hpp"
#include "uavrf/wavelet.hpp"
