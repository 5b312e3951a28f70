// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "analytics.hpp"
#include "chebyshev.hpp"
#include "config.hpp"
#include "dual.hpp"
#include "errors.hpp"
#include "liability.hpp"
#include "market.hpp"
#include "membership.hpp"
#include "numerics.hpp"
#include "parallel.hpp"
#include "policy.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "replication.hpp"
#include "scenario.hpp"
#include "simulation.hpp"
