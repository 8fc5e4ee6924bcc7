//
// Copyright 2026 The fedsia Authors
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
//

#ifndef FEDSIA_PARALLEL_H_
#define FEDSIA_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace fedsia {

// Runs fn(0) ... fn(n - 1) on up to `threads` worker threads. Work items are
// claimed dynamically; callers write results into per-index slots so output
// never depends on scheduling. After all workers join, the exception of the
// lowest failing index (if any) is rethrown.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace fedsia

#endif  // FEDSIA_PARALLEL_H_
