// Copyright 2026 The qsimnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "qsimnet/circuit.hpp"
#include "qsimnet/distributor.hpp"
#include "qsimnet/engine.hpp"
#include "qsimnet/errors.hpp"
#include "qsimnet/network.hpp"
#include "qsimnet/oracle.hpp"
#include "qsimnet/planner.hpp"
#include "qsimnet/rng.hpp"
#include "qsimnet/stats.hpp"
#include "qsimnet/store.hpp"
#include "qsimnet/tensor.hpp"
