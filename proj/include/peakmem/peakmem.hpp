/* Copyright 2026 The peakmem Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/


#pragma once

#include "peakmem/budgeting.hpp"
#include "peakmem/dp_scheduler.hpp"
#include "peakmem/graph.hpp"
#include "peakmem/graph_json.hpp"
#include "peakmem/liveness.hpp"
#include "peakmem/memsim.hpp"
#include "peakmem/node_set.hpp"
#include "peakmem/oracle.hpp"
#include "peakmem/partitioner.hpp"
#include "peakmem/pipeline.hpp"
#include "peakmem/refexec.hpp"
#include "peakmem/rewriter.hpp"
#include "peakmem/schedule.hpp"
