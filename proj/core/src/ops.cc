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

#include "trc/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "op_util.h"
#include "trc/errors.h"

namespace trc {
namespace {

using internal::GradOrNull;
using internal::Record;
using internal::Recording;

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;

[[noreturn]] void ThrowShapes(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       ShapeToString(a) + " and " + ShapeToString(b));
}

// Index maps from each output element to the contributing input element.
struct BroadcastPlan {
  Shape out;
  bool identity = false;
  std::vector<int64_t> a_index;
  std::vector<int64_t> b_index;
};

std::vector<int64_t> BroadcastIndex(const Shape& in, const Shape& out) {
  const int r = static_cast<int>(out.size());
  const int offset = r - static_cast<int>(in.size());
  std::vector<int64_t> in_stride(r, 0);
  int64_t stride = 1;
  for (int i = r - 1; i >= offset; --i) {
    const int d = in[i - offset];
    in_stride[i] = (d == 1) ? 0 : stride;
    stride *= d;
  }
  const int64_t n = NumElements(out);
  std::vector<int64_t> index(n);
  std::vector<int> coord(r, 0);
  int64_t pos = 0;
  for (int64_t flat = 0; flat < n; ++flat) {
    index[flat] = pos;
    for (int i = r - 1; i >= 0; --i) {
      ++coord[i];
      pos += in_stride[i];
      if (coord[i] < out[i]) break;
      pos -= in_stride[i] * coord[i];
      coord[i] = 0;
    }
  }
  return index;
}

BroadcastPlan PlanBroadcast(const char* op, const Shape& a, const Shape& b) {
  BroadcastPlan plan;
  if (a == b) {
    plan.out = a;
    plan.identity = true;
    return plan;
  }
  const size_t r = std::max(a.size(), b.size());
  plan.out.assign(r, 1);
  for (size_t i = 0; i < r; ++i) {
    const int da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const int db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1) ThrowShapes(op, a, b);
    plan.out[i] = std::max(da, db);
  }
  plan.a_index = BroadcastIndex(a, plan.out);
  plan.b_index = BroadcastIndex(b, plan.out);
  return plan;
}

// Generic broadcasting binary op. `fwd(x, y)` gives the value; `dx(x, y, z)`
// and `dy(x, y, z)` give the partial derivatives, with z the output value.
template <typename F, typename Dx, typename Dy>
Tensor BinaryOp(const char* name, const Tensor& a, const Tensor& b, F fwd,
                Dx dx, Dy dy) {
  auto plan = std::make_shared<BroadcastPlan>(
      PlanBroadcast(name, a.shape(), b.shape()));
  const int64_t n = NumElements(plan->out);
  std::vector<double> out(n);
  const auto& av = a.values();
  const auto& bv = b.values();
  if (plan->identity) {
    for (int64_t i = 0; i < n; ++i) out[i] = fwd(av[i], bv[i]);
  } else {
    for (int64_t i = 0; i < n; ++i) {
      out[i] = fwd(av[plan->a_index[i]], bv[plan->b_index[i]]);
    }
  }
  Tensor y(plan->out, std::move(out));
  if (Recording({&a, &b})) {
    auto ai = a.impl();
    auto bi = b.impl();
    auto yi = y.impl();
    Record(name, y,
           [ai, bi, yi, plan, dx, dy](const std::vector<double>& g) {
             double* ga = GradOrNull(ai);
             double* gb = GradOrNull(bi);
             const auto& av = ai->data;
             const auto& bv = bi->data;
             const auto& yv = yi->data;
             const int64_t n = static_cast<int64_t>(g.size());
             for (int64_t i = 0; i < n; ++i) {
               const int64_t ia = plan->identity ? i : plan->a_index[i];
               const int64_t ib = plan->identity ? i : plan->b_index[i];
               if (ga) ga[ia] += g[i] * dx(av[ia], bv[ib], yv[i]);
               if (gb) gb[ib] += g[i] * dy(av[ia], bv[ib], yv[i]);
             }
           });
  }
  return y;
}

// Elementwise unary op; `df(x, y)` is the derivative given input and output.
template <typename F, typename Df>
Tensor UnaryOp(const char* name, const Tensor& x, F f, Df df) {
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  Tensor y(x.shape(), std::move(out));
  if (Recording({&x})) {
    auto xi = x.impl();
    auto yi = y.impl();
    Record(name, y, [xi, yi, df](const std::vector<double>& g) {
      double* gx = GradOrNull(xi);
      if (!gx) return;
      for (size_t i = 0; i < g.size(); ++i) {
        gx[i] += g[i] * df(xi->data[i], yi->data[i]);
      }
    });
  }
  return y;
}

int NormalizeAxis(int axis, int rank, const char* op) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) {
    throw DimensionError(std::string(op) + ": axis out of range");
  }
  return axis;
}

int64_t Product(const Shape& s, int begin, int end) {
  int64_t p = 1;
  for (int i = begin; i < end; ++i) p *= s[i];
  return p;
}

// Adds `g` into the gradient of `impl` (same length) when it is tracked.
void AccumulateAll(const std::shared_ptr<TensorImpl>& impl,
                   const std::vector<double>& g) {
  double* gx = GradOrNull(impl);
  if (!gx) return;
  for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
}

}  // namespace

Tensor MatMul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    ThrowShapes("matmul", a.shape(), b.shape());
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(static_cast<size_t>(m) * n);
  MutMap(out.data(), m, n).noalias() =
      ConstMap(a.values().data(), m, k) * ConstMap(b.values().data(), k, n);
  Tensor y({m, n}, std::move(out));
  if (Recording({&a, &b})) {
    auto ai = a.impl();
    auto bi = b.impl();
    Record("matmul", y, [ai, bi, m, k, n](const std::vector<double>& g) {
      ConstMap gm(g.data(), m, n);
      if (double* ga = GradOrNull(ai)) {
        MutMap(ga, m, k).noalias() +=
            gm * ConstMap(bi->data.data(), k, n).transpose();
      }
      if (double* gb = GradOrNull(bi)) {
        MutMap(gb, k, n).noalias() +=
            ConstMap(ai->data.data(), m, k).transpose() * gm;
      }
    });
  }
  return y;
}

Tensor BatchMatMul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) ||
      a.dim(2) != b.dim(1)) {
    ThrowShapes("batch_matmul", a.shape(), b.shape());
  }
  const int batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  std::vector<double> out(static_cast<size_t>(batch) * m * n);
  for (int i = 0; i < batch; ++i) {
    MutMap(out.data() + static_cast<size_t>(i) * m * n, m, n).noalias() =
        ConstMap(a.values().data() + static_cast<size_t>(i) * m * k, m, k) *
        ConstMap(b.values().data() + static_cast<size_t>(i) * k * n, k, n);
  }
  Tensor y({batch, m, n}, std::move(out));
  if (Recording({&a, &b})) {
    auto ai = a.impl();
    auto bi = b.impl();
    Record("batch_matmul", y,
           [ai, bi, batch, m, k, n](const std::vector<double>& g) {
             double* ga = GradOrNull(ai);
             double* gb = GradOrNull(bi);
             for (int i = 0; i < batch; ++i) {
               ConstMap gm(g.data() + static_cast<size_t>(i) * m * n, m, n);
               const size_t oa = static_cast<size_t>(i) * m * k;
               const size_t ob = static_cast<size_t>(i) * k * n;
               if (ga) {
                 MutMap(ga + oa, m, k).noalias() +=
                     gm * ConstMap(bi->data.data() + ob, k, n).transpose();
               }
               if (gb) {
                 MutMap(gb + ob, k, n).noalias() +=
                     ConstMap(ai->data.data() + oa, m, k).transpose() * gm;
               }
             }
           });
  }
  return y;
}

Tensor Add(const Tensor& a, const Tensor& b) {
  return BinaryOp(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  return BinaryOp(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  return BinaryOp(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Tensor Div(const Tensor& a, const Tensor& b) {
  return BinaryOp(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double z) { return -z / y; });
}

Tensor Scale(const Tensor& x, double factor) {
  return UnaryOp(
      "scale", x, [factor](double v) { return factor * v; },
      [factor](double, double) { return factor; });
}

Tensor AddScalar(const Tensor& x, double value) {
  return UnaryOp(
      "add_scalar", x, [value](double v) { return v + value; },
      [](double, double) { return 1.0; });
}

Tensor Neg(const Tensor& x) { return Scale(x, -1.0); }

Tensor Square(const Tensor& x) {
  return UnaryOp(
      "square", x, [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

Tensor Sqrt(const Tensor& x) {
  return UnaryOp(
      "sqrt", x, [](double v) { return std::sqrt(v); },
      [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor Relu(const Tensor& x) {
  return UnaryOp(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor Gelu(const Tensor& x) {
  return UnaryOp(
      "gelu", x,
      [](double v) {
        const double t = std::tanh(kGeluScale * (v + kGeluCubic * v * v * v));
        return 0.5 * v * (1.0 + t);
      },
      [](double v, double) {
        const double t = std::tanh(kGeluScale * (v + kGeluCubic * v * v * v));
        const double dinner = kGeluScale * (1.0 + 3.0 * kGeluCubic * v * v);
        return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * dinner;
      });
}

Tensor Clamp(const Tensor& x, const Tensor& lo, const Tensor& hi) {
  const auto lo_plan = PlanBroadcast("clamp", x.shape(), lo.shape());
  const auto hi_plan = PlanBroadcast("clamp", x.shape(), hi.shape());
  if (lo_plan.out != x.shape() || hi_plan.out != x.shape()) {
    ThrowShapes("clamp", x.shape(), lo.shape());
  }
  const int64_t n = x.numel();
  std::vector<double> out(n);
  auto pass = std::make_shared<std::vector<char>>(n);
  for (int64_t i = 0; i < n; ++i) {
    const double l = lo.at(lo_plan.identity ? i : lo_plan.b_index[i]);
    const double h = hi.at(hi_plan.identity ? i : hi_plan.b_index[i]);
    const double v = x.at(i);
    out[i] = std::clamp(v, l, h);
    (*pass)[i] = (v >= l && v <= h) ? 1 : 0;
  }
  Tensor y(x.shape(), std::move(out));
  if (Recording({&x})) {
    auto xi = x.impl();
    Record("clamp", y, [xi, pass](const std::vector<double>& g) {
      double* gx = GradOrNull(xi);
      if (!gx) return;
      for (size_t i = 0; i < g.size(); ++i) {
        if ((*pass)[i]) gx[i] += g[i];
      }
    });
  }
  return y;
}

Tensor Sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  Tensor y = Tensor::Scalar(s);
  if (Recording({&x})) {
    auto xi = x.impl();
    Record("sum", y, [xi](const std::vector<double>& g) {
      double* gx = GradOrNull(xi);
      if (!gx) return;
      for (size_t i = 0; i < xi->data.size(); ++i) gx[i] += g[0];
    });
  }
  return y;
}

Tensor Mean(const Tensor& x) {
  return Scale(Sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor SumLastAxis(const Tensor& x) {
  if (x.rank() < 1) throw DimensionError("sum_last_axis: rank-0 input");
  const int d = x.dim(-1);
  const int64_t rows = x.numel() / d;
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  std::vector<double> out(rows, 0.0);
  const auto& xv = x.values();
  for (int64_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += xv[r * d + j];
    out[r] = s;
  }
  Tensor y(out_shape, std::move(out));
  if (Recording({&x})) {
    auto xi = x.impl();
    Record("sum_last_axis", y, [xi, d, rows](const std::vector<double>& g) {
      double* gx = GradOrNull(xi);
      if (!gx) return;
      for (int64_t r = 0; r < rows; ++r) {
        for (int j = 0; j < d; ++j) gx[r * d + j] += g[r];
      }
    });
  }
  return y;
}

Tensor NormLastAxis(const Tensor& x) {
  if (x.rank() < 1) throw DimensionError("norm_last_axis: rank-0 input");
  const int d = x.dim(-1);
  const int64_t rows = x.numel() / d;
  Shape out_shape = x.shape();
  out_shape.back() = 1;
  std::vector<double> out(rows);
  const auto& xv = x.values();
  for (int64_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += xv[r * d + j] * xv[r * d + j];
    out[r] = std::sqrt(s);
  }
  Tensor y(out_shape, std::move(out));
  if (Recording({&x})) {
    auto xi = x.impl();
    auto yi = y.impl();
    Record("norm_last_axis", y,
           [xi, yi, d, rows](const std::vector<double>& g) {
             double* gx = GradOrNull(xi);
             if (!gx) return;
             for (int64_t r = 0; r < rows; ++r) {
               const double nrm = yi->data[r];
               if (nrm <= 0.0) continue;
               for (int j = 0; j < d; ++j) {
                 gx[r * d + j] += g[r] * xi->data[r * d + j] / nrm;
               }
             }
           });
  }
  return y;
}

Tensor Reshape(const Tensor& x, const Shape& shape) {
  if (NumElements(shape) != x.numel()) {
    ThrowShapes("reshape", x.shape(), shape);
  }
  Tensor y(shape, x.values());
  if (Recording({&x})) {
    auto xi = x.impl();
    Record("reshape", y,
           [xi](const std::vector<double>& g) { AccumulateAll(xi, g); });
  }
  return y;
}

Tensor Concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& first = parts[0].shape();
  const int r = static_cast<int>(first.size());
  axis = NormalizeAxis(axis, r, "concat");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    if (static_cast<int>(s.size()) != r) ThrowShapes("concat", first, s);
    for (int i = 0; i < r; ++i) {
      if (i != axis && s[i] != first[i]) ThrowShapes("concat", first, s);
    }
    out_shape[axis] += s[axis];
  }
  const int64_t outer = Product(first, 0, axis);
  const int64_t inner = Product(first, axis + 1, r);
  const int64_t out_row = out_shape[axis] * inner;
  std::vector<double> out(NumElements(out_shape));
  std::vector<int64_t> offsets;
  int64_t offset = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(offset);
    const int64_t chunk = p.dim(axis) * inner;
    const auto& pv = p.values();
    for (int64_t o = 0; o < outer; ++o) {
      std::copy_n(pv.begin() + o * chunk, chunk,
                  out.begin() + o * out_row + offset);
    }
    offset += chunk;
  }
  Tensor y(out_shape, std::move(out));
  bool record = false;
  if (ActiveTape() != nullptr) {
    for (const Tensor& p : parts) record = record || p.requires_grad();
  }
  if (record) {
    std::vector<std::shared_ptr<TensorImpl>> impls;
    for (const Tensor& p : parts) impls.push_back(p.impl());
    Record("concat", y,
           [impls, offsets, outer, out_row](const std::vector<double>& g) {
             for (size_t k = 0; k < impls.size(); ++k) {
               double* gp = GradOrNull(impls[k]);
               if (!gp) continue;
               const int64_t chunk =
                   static_cast<int64_t>(impls[k]->data.size()) / outer;
               for (int64_t o = 0; o < outer; ++o) {
                 const double* src = g.data() + o * out_row + offsets[k];
                 for (int64_t j = 0; j < chunk; ++j) gp[o * chunk + j] += src[j];
               }
             }
           });
  }
  return y;
}

Tensor Stack(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw DimensionError("stack: no inputs");
  const Shape& first = parts[0].shape();
  const int r = static_cast<int>(first.size());
  if (axis < 0) axis += r + 1;
  if (axis < 0 || axis > r) throw DimensionError("stack: axis out of range");
  for (const Tensor& p : parts) {
    if (p.shape() != first) ThrowShapes("stack", first, p.shape());
  }
  const int64_t outer = Product(first, 0, axis);
  const int64_t inner = Product(first, axis, r);
  const int64_t count = static_cast<int64_t>(parts.size());
  Shape out_shape = first;
  out_shape.insert(out_shape.begin() + axis, static_cast<int>(count));
  std::vector<double> out(NumElements(out_shape));
  for (int64_t k = 0; k < count; ++k) {
    const auto& pv = parts[k].values();
    for (int64_t o = 0; o < outer; ++o) {
      std::copy_n(pv.begin() + o * inner, inner,
                  out.begin() + (o * count + k) * inner);
    }
  }
  Tensor y(out_shape, std::move(out));
  bool record = false;
  if (ActiveTape() != nullptr) {
    for (const Tensor& p : parts) record = record || p.requires_grad();
  }
  if (record) {
    std::vector<std::shared_ptr<TensorImpl>> impls;
    for (const Tensor& p : parts) impls.push_back(p.impl());
    Record("stack", y, [impls, outer, inner](const std::vector<double>& g) {
      const int64_t count = static_cast<int64_t>(impls.size());
      for (int64_t k = 0; k < count; ++k) {
        double* gp = GradOrNull(impls[k]);
        if (!gp) continue;
        for (int64_t o = 0; o < outer; ++o) {
          const double* src = g.data() + (o * count + k) * inner;
          for (int64_t j = 0; j < inner; ++j) gp[o * inner + j] += src[j];
        }
      }
    });
  }
  return y;
}

Tensor Slice(const Tensor& x, int axis, int start, int length) {
  const int r = x.rank();
  axis = NormalizeAxis(axis, r, "slice");
  const int extent = x.dim(axis);
  if (start < 0 || length <= 0 || start + length > extent) {
    throw DimensionError("slice: range [" + std::to_string(start) + ", " +
                         std::to_string(start + length) +
                         ") outside axis of size " + std::to_string(extent));
  }
  const int64_t outer = Product(x.shape(), 0, axis);
  const int64_t inner = Product(x.shape(), axis + 1, r);
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  std::vector<double> out(NumElements(out_shape));
  const auto& xv = x.values();
  const int64_t chunk = static_cast<int64_t>(length) * inner;
  for (int64_t o = 0; o < outer; ++o) {
    std::copy_n(xv.begin() + (o * extent + start) * inner, chunk,
                out.begin() + o * chunk);
  }
  Tensor y(out_shape, std::move(out));
  if (Recording({&x})) {
    auto xi = x.impl();
    Record("slice", y,
           [xi, outer, inner, extent, start, chunk](
               const std::vector<double>& g) {
             double* gx = GradOrNull(xi);
             if (!gx) return;
             for (int64_t o = 0; o < outer; ++o) {
               double* dst = gx + (o * extent + start) * inner;
               const double* src = g.data() + o * chunk;
               for (int64_t j = 0; j < chunk; ++j) dst[j] += src[j];
             }
           });
  }
  return y;
}

Tensor Permute(const Tensor& x, const std::vector<int>& perm) {
  const int r = x.rank();
  if (static_cast<int>(perm.size()) != r) {
    throw DimensionError("permute: permutation rank mismatch");
  }
  std::vector<int> seen(r, 0);
  for (int p : perm) {
    if (p < 0 || p >= r || seen[p]++) {
      throw DimensionError("permute: invalid permutation");
    }
  }
  const Shape& in = x.shape();
  Shape out_shape(r);
  for (int i = 0; i < r; ++i) out_shape[i] = in[perm[i]];
  std::vector<int64_t> in_stride(r, 1);
  for (int i = r - 2; i >= 0; --i) in_stride[i] = in_stride[i + 1] * in[i + 1];
  const int64_t n = x.numel();
  auto src_index = std::make_shared<std::vector<int64_t>>(n);
  std::vector<int> coord(r, 0);
  int64_t pos = 0;
  for (int64_t flat = 0; flat < n; ++flat) {
    (*src_index)[flat] = pos;
    for (int i = r - 1; i >= 0; --i) {
      ++coord[i];
      pos += in_stride[perm[i]];
      if (coord[i] < out_shape[i]) break;
      pos -= in_stride[perm[i]] * coord[i];
      coord[i] = 0;
    }
  }
  std::vector<double> out(n);
  const auto& xv = x.values();
  for (int64_t i = 0; i < n; ++i) out[i] = xv[(*src_index)[i]];
  Tensor y(out_shape, std::move(out));
  if (Recording({&x})) {
    auto xi = x.impl();
    Record("permute", y, [xi, src_index](const std::vector<double>& g) {
      double* gx = GradOrNull(xi);
      if (!gx) return;
      for (size_t i = 0; i < g.size(); ++i) gx[(*src_index)[i]] += g[i];
    });
  }
  return y;
}

Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps) {
  if (x.rank() < 1) throw DimensionError("layernorm: rank-0 input");
  const int d = x.dim(-1);
  if (gamma.numel() != d || beta.numel() != d) {
    ThrowShapes("layernorm", x.shape(), gamma.shape());
  }
  if (!(eps > 0.0)) throw ContractError("layernorm: eps must be positive");
  const int64_t rows = x.numel() / d;
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto rstd = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(x.numel());
  const auto& xv = x.values();
  const auto& gv = gamma.values();
  const auto& bv = beta.values();
  for (int64_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * d;
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += row[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= d;
    const double s = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = s;
    for (int j = 0; j < d; ++j) {
      const double h = (row[j] - mean) * s;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = gv[j] * h + bv[j];
    }
  }
  Tensor y(x.shape(), std::move(out));
  if (Recording({&x, &gamma, &beta})) {
    auto xi = x.impl();
    auto gi = gamma.impl();
    auto bi = beta.impl();
    Record("layernorm", y,
           [xi, gi, bi, xhat, rstd, d, rows](const std::vector<double>& g) {
             double* gx = GradOrNull(xi);
             double* gg = GradOrNull(gi);
             double* gb = GradOrNull(bi);
             const auto& gamma_v = gi->data;
             std::vector<double> dh(d);
             for (int64_t r = 0; r < rows; ++r) {
               const double* gr = g.data() + r * d;
               const double* hr = xhat->data() + r * d;
               double mean_dh = 0.0, mean_dh_h = 0.0;
               for (int j = 0; j < d; ++j) {
                 if (gg) gg[j] += gr[j] * hr[j];
                 if (gb) gb[j] += gr[j];
                 dh[j] = gr[j] * gamma_v[j];
                 mean_dh += dh[j];
                 mean_dh_h += dh[j] * hr[j];
               }
               if (!gx) continue;
               mean_dh /= d;
               mean_dh_h /= d;
               const double s = (*rstd)[r];
               for (int j = 0; j < d; ++j) {
                 gx[r * d + j] += s * (dh[j] - mean_dh - hr[j] * mean_dh_h);
               }
             }
           });
  }
  return y;
}

Tensor Softmax(const Tensor& x) {
  if (x.rank() < 1) throw DimensionError("softmax: rank-0 input");
  const int n = x.dim(-1);
  const int64_t rows = x.numel() / n;
  std::vector<double> out(x.numel());
  const auto& xv = x.values();
  for (int64_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      out[r * n + j] = std::exp(row[j] - mx);
      z += out[r * n + j];
    }
    for (int j = 0; j < n; ++j) out[r * n + j] /= z;
  }
  Tensor y(x.shape(), std::move(out));
  if (Recording({&x})) {
    auto xi = x.impl();
    auto yi = y.impl();
    Record("softmax", y, [xi, yi, n, rows](const std::vector<double>& g) {
      double* gx = GradOrNull(xi);
      if (!gx) return;
      const auto& yv = yi->data;
      for (int64_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += g[r * n + j] * yv[r * n + j];
        for (int j = 0; j < n; ++j) {
          gx[r * n + j] += yv[r * n + j] * (g[r * n + j] - dot);
        }
      }
    });
  }
  return y;
}

}  // namespace trc
