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

#include "inspo/planning.h"

#include <cmath>
#include <limits>

#include "inspo/errors.h"

namespace inspo {

JointOptimum JointValueIteration(const TabularGame& game, double tol,
                                 int max_iters) {
  const int S = game.num_states();
  const int J = game.num_joint_actions();
  JointOptimum out;
  out.v.assign(S, 0.0);
  out.q = GlobalQTable(S, J);
  std::vector<double> next(S, 0.0);
  for (int it = 1; it <= max_iters; ++it) {
    double delta = 0.0;
    for (int s = 0; s < S; ++s) {
      if (game.is_terminal(s)) {
        next[s] = 0.0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < J; ++a) {
        double q = game.reward(s, a);
        for (const Transition& t : game.transitions(s, a)) {
          q += game.gamma() * t.prob * out.v[t.next_state];
        }
        out.q(s, a) = q;
        best = std::max(best, q);
      }
      next[s] = best;
      delta = std::max(delta, std::abs(best - out.v[s]));
    }
    out.v.swap(next);
    out.iterations = it;
    if (delta <= tol) return out;
  }
  throw NumericError("joint value iteration did not converge");
}

double StartValue(const TabularGame& game, const std::vector<double>& v) {
  double total = 0.0;
  for (int s = 0; s < game.num_states(); ++s) {
    total += game.initial_dist()[s] * v[s];
  }
  return total;
}

}  // namespace inspo
