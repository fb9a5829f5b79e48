// Copyright 2026 The InSPO Tabular Lab Authors
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

#ifndef INSPO_PLANNING_H_
#define INSPO_PLANNING_H_

#include <vector>

#include "inspo/game.h"

namespace inspo {

// Unregularized optimal values of the game when one planner controls the
// joint action.
struct JointOptimum {
  std::vector<double> v;
  GlobalQTable q;
  int iterations = 0;
};

JointOptimum JointValueIteration(const TabularGame& game, double tol = 1e-12,
                                 int max_iters = 100000);

// Expected discounted return of the start distribution under `v`.
double StartValue(const TabularGame& game, const std::vector<double>& v);

}  // namespace inspo

#endif  // INSPO_PLANNING_H_
