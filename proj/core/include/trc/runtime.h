// Copyright 2026 The TRC Authors
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

#ifndef TRC_RUNTIME_H_
#define TRC_RUNTIME_H_

namespace trc {

// Keeps large tensor buffers on the heap instead of a fresh mapping per
// allocation. Rollouts allocate and free many mid-sized buffers, and with
// the default glibc thresholds most of the run time goes to mmap/munmap.
// No effect on other C libraries. Call once at startup.
void ConfigureAllocator();

}  // namespace trc

#endif  // TRC_RUNTIME_H_
