// Copyright 2026  The dfwhisper Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

#include "dfw/nn/tensor.h"

namespace dfw::nn::detail {

/// C (M x N) = op(A) * op(B), or C += ... when accumulate. All row-major.
/// A is (M x K), or (K x M) when trans_a; B is (K x N), or (N x K) when trans_b.
void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k, const real* a,
          const real* b, real* c, bool accumulate);

}  // namespace dfw::nn::detail
