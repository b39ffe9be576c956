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

#ifndef TRC_TENSOR_H_
#define TRC_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace trc {

using Shape = std::vector<int>;

// Number of elements described by `shape` (1 for a rank-0 shape).
int64_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

// Storage behind a Tensor handle. Several handles may alias one impl.
struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  // Empty until a backward pass (or optimizer) touches it.
  std::vector<double> grad;
  bool requires_grad = false;

  // Allocates a zeroed gradient buffer on first use.
  std::vector<double>& MutableGrad();
};

// Dense row-major float64 array with shared ownership. Copying a Tensor
// copies the handle, not the data; use Clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Zeros(const Shape& shape);
  static Tensor Full(const Shape& shape, double value);
  static Tensor Scalar(double value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int axis) const;
  int64_t numel() const { return static_cast<int64_t>(impl_->data.size()); }

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }
  const std::vector<double>& values() const { return impl_->data; }

  bool has_grad() const { return !impl_->grad.empty(); }
  // Gradient buffer; zeros when no backward pass has reached this tensor.
  std::vector<double> grad() const;
  std::span<double> mutable_grad() { return impl_->MutableGrad(); }
  void ZeroGrad() { impl_->grad.clear(); }

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool value);

  // Value of a single-element tensor.
  double item() const;
  double at(int64_t flat_index) const { return impl_->data[flat_index]; }

  // Deep copy that does not participate in any tape.
  Tensor Clone() const;
  // Same data, new impl with requires_grad=false; cuts the tape.
  Tensor Detach() const { return Clone(); }

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Ordered record of differentiable operations. Entries are appended in
// execution order, so inputs always precede the entries that consume them.
class Tape {
 public:
  // Propagates the output gradient into input gradients.
  using BackwardFn = std::function<void(const std::vector<double>& out_grad)>;

  struct Entry {
    const char* op;
    std::shared_ptr<TensorImpl> output;
    BackwardFn backward;
  };

  void Record(const char* op, const Tensor& output, BackwardFn backward);
  size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  void Clear() { entries_.clear(); }

 private:
  std::vector<Entry> entries_;
};

// Installs `tape` as the calling thread's recording tape for the lifetime
// of the scope. Without an active tape, operations are not recorded.
class TapeScope {
 public:
  explicit TapeScope(Tape* tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* ActiveTape();

// Disables recording for the lifetime of the scope.
class NoGradScope {
 public:
  NoGradScope() : scope_(nullptr) {}

 private:
  TapeScope scope_;
};

// Reverse-mode sweep: seeds d(loss)/d(loss) = 1 and walks `tape` in exact
// reverse order, accumulating into every requires_grad tensor reachable
// from `loss`. Throws ContractError if `loss` is not a single element.
void Backward(const Tensor& loss, const Tape& tape);

}  // namespace trc

#endif  // TRC_TENSOR_H_
