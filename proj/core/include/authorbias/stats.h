// Copyright 2026 The authorbias Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <span>

namespace authorbias {

struct TTestResult {
  double t = 0.0;
  double p_two_sided = 1.0;
  double df = 0.0;
  // Zero variance in the differences: t is undefined (all zero, p = 1) or
  // infinite (constant non-zero shift, p = 0).
  bool degenerate = false;

  bool significant(double alpha = 0.05) const { return p_two_sided < alpha; }
};

// Two-sided tail of Student's t with `df` degrees of freedom:
// P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2).
double student_t_two_sided_p(double t, double df);

// Paired t-test on a[i] - b[i] with n - 1 degrees of freedom.
// Throws ValidationError if sizes differ or n < 2.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// One-sample t-test of the mean of `values` against zero.
TTestResult one_sample_t_test(std::span<const double> values);

}  // namespace authorbias
