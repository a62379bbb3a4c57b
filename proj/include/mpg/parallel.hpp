// Copyright 2026 The mpgkit Authors
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

#ifndef MPG_PARALLEL_HPP_
#define MPG_PARALLEL_HPP_

// Thin OpenMP wrappers. Every kernel that uses these has a serial twin in
// serial_reference.hpp; results must agree bitwise, so parallel loops only
// ever write to disjoint slots and reductions happen serially afterwards.

#define MPG_STR(s) #s
#ifdef _OPENMP
#include <omp.h>
#define MPG_PARALLEL_FOR _Pragma(MPG_STR(omp parallel for schedule(static)))
#define MPG_PARALLEL_FOR_DYNAMIC _Pragma(MPG_STR(omp parallel for schedule(dynamic)))
#else
#define MPG_PARALLEL_FOR
#define MPG_PARALLEL_FOR_DYNAMIC
#endif

namespace mpg {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace mpg

#endif  // MPG_PARALLEL_HPP_
