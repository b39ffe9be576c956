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

#ifndef TRC_SRC_OP_UTIL_H_
#define TRC_SRC_OP_UTIL_H_

#include <initializer_list>
#include <memory>
#include <utility>

#include "trc/tensor.h"

namespace trc::internal {

// True when a tape is active and at least one input needs a gradient.
inline bool Recording(std::initializer_list<const Tensor*> inputs) {
  if (ActiveTape() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

inline void Record(const char* op, Tensor& output, Tape::BackwardFn fn) {
  output.set_requires_grad(true);
  ActiveTape()->Record(op, output, std::move(fn));
}

// Gradient buffer of `impl` if it participates in differentiation.
inline double* GradOrNull(const std::shared_ptr<TensorImpl>& impl) {
  if (!impl->requires_grad) return nullptr;
  return impl->MutableGrad().data();
}

}  // namespace trc::internal

#endif  // TRC_SRC_OP_UTIL_H_
