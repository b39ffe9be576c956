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

#include "trc/tensor.h"

#include <cmath>
#include <sstream>
#include <utility>

#include "trc/errors.h"

namespace trc {
namespace {

thread_local Tape* active_tape = nullptr;

}  // namespace

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

std::vector<double>& TensorImpl::MutableGrad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : impl_(std::make_shared<TensorImpl>()) {
  for (int d : shape) {
    if (d <= 0) {
      throw DimensionError("tensor dimensions must be positive, got " +
                           ShapeToString(shape));
    }
  }
  if (NumElements(shape) != static_cast<int64_t>(data.size())) {
    throw DimensionError("shape " + ShapeToString(shape) + " does not match " +
                         std::to_string(data.size()) + " data elements");
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
}

Tensor Tensor::Zeros(const Shape& shape) { return Full(shape, 0.0); }

Tensor Tensor::Full(const Shape& shape, double value) {
  return Tensor(shape, std::vector<double>(NumElements(shape), value));
}

Tensor Tensor::Scalar(double value) { return Tensor({}, {value}); }

int Tensor::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw DimensionError("axis out of range for shape " +
                         ShapeToString(shape()));
  }
  return impl_->shape[axis];
}

std::vector<double> Tensor::grad() const {
  if (impl_->grad.empty()) return std::vector<double>(impl_->data.size(), 0.0);
  return impl_->grad;
}

Tensor& Tensor::set_requires_grad(bool value) {
  impl_->requires_grad = value;
  return *this;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() on tensor of shape " + ShapeToString(shape()));
  }
  return impl_->data[0];
}

Tensor Tensor::Clone() const { return Tensor(impl_->shape, impl_->data); }

void Tape::Record(const char* op, const Tensor& output, BackwardFn backward) {
  entries_.push_back(Entry{op, output.impl(), std::move(backward)});
}

TapeScope::TapeScope(Tape* tape) : previous_(active_tape) {
  active_tape = tape;
}

TapeScope::~TapeScope() { active_tape = previous_; }

Tape* ActiveTape() { return active_tape; }

void Backward(const Tensor& loss, const Tape& tape) {
  if (loss.numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        ShapeToString(loss.shape()));
  }
  loss.impl()->MutableGrad()[0] += 1.0;
  const auto& entries = tape.entries();
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    const TensorImpl& out = *it->output;
    if (out.grad.empty()) continue;
    it->backward(out.grad);
  }
}

}  // namespace trc
