#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

// Umbrella header. The live HTTP backend stays out (include
// <reinfer/http_backend.hpp> explicitly); everything else is header-only
// and pulled in here.

#include <reinfer/analysis.hpp>
#include <reinfer/backend.hpp>
#include <reinfer/dataset.hpp>
#include <reinfer/error.hpp>
#include <reinfer/extract.hpp>
#include <reinfer/harness.hpp>
#include <reinfer/hash.hpp>
#include <reinfer/metrics.hpp>
#include <reinfer/policy.hpp>
#include <reinfer/prompts.hpp>
#include <reinfer/record.hpp>
#include <reinfer/replay.hpp>
#include <reinfer/runlog.hpp>
#include <reinfer/simulator.hpp>
