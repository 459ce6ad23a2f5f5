// Copyright 2026 The farfield Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Umbrella header.

#ifndef FARFIELD_FARFIELD_HPP_
#define FARFIELD_FARFIELD_HPP_

#include "farfield/align.hpp"
#include "farfield/beamform.hpp"
#include "farfield/common.hpp"
#include "farfield/dereverb.hpp"
#include "farfield/io.hpp"
#include "farfield/metrics.hpp"
#include "farfield/mixgen.hpp"
#include "farfield/pipeline.hpp"
#include "farfield/stft.hpp"
#include "farfield/tdoa.hpp"

#endif  // FARFIELD_FARFIELD_HPP_
