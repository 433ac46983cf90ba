// SPDX-License-Identifier: Apache-2.0
//
// hbfsim — umbrella header.

#pragma once

#include "hbf/analog.hpp"
#include "hbf/channel.hpp"
#include "hbf/config.hpp"
#include "hbf/digital.hpp"
#include "hbf/errors.hpp"
#include "hbf/harness.hpp"
#include "hbf/io.hpp"
#include "hbf/metrics.hpp"
#include "hbf/selection.hpp"
