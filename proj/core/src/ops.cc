// core/src/ops.cc
//
// Copyright 2026 The cvec Authors
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

#include "cvec/ops.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace cvec {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap cview(const std::vector<double>& d, std::size_t r, std::size_t c) {
  return ConstMap(d.data(), static_cast<Eigen::Index>(r),
                  static_cast<Eigen::Index>(c));
}

MutMap mview(std::span<double> d, std::size_t r, std::size_t c) {
  return MutMap(d.data(), static_cast<Eigen::Index>(r),
                static_cast<Eigen::Index>(c));
}

detail::Node& parent(detail::Node& self, std::size_t i) {
  return *self.parents[i];
}

bool tracks(detail::Node& self, std::size_t i) {
  return self.parents[i]->requires_grad;
}

void require_rank2_or_less(const Tensor& x, const char* op) {
  if (x.rank() > 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         shape_to_string(x.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2_or_less(a, "matmul");
  require_rank2_or_less(b, "matmul");
  const std::size_t m = a.rows(), n = a.cols(), p = b.cols();
  if (b.rows() != n) {
    throw DimensionError("matmul: inner dimensions differ for " +
                         shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  std::vector<double> out(m * p);
  mview(out, m, p).noalias() =
      cview(a.node()->data, m, n) * cview(b.node()->data, n, p);
  return make_result("matmul", {m, p}, std::move(out), {a, b},
                     [m, n, p](detail::Node& self) {
                       auto g = cview(self.grad, m, p);
                       if (tracks(self, 0)) {
                         auto& pa = parent(self, 0);
                         mview(pa.ensure_grad(), m, n).noalias() +=
                             g * cview(parent(self, 1).data, n, p).transpose();
                       }
                       if (tracks(self, 1)) {
                         auto& pb = parent(self, 1);
                         mview(pb.ensure_grad(), n, p).noalias() +=
                             cview(parent(self, 0).data, m, n).transpose() * g;
                       }
                     });
}

Tensor transpose(const Tensor& x) {
  require_rank2_or_less(x, "transpose");
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<double> out(r * c);
  mview(out, c, r) = cview(x.node()->data, r, c).transpose();
  return make_result("transpose", {c, r}, std::move(out), {x},
                     [r, c](detail::Node& self) {
                       mview(parent(self, 0).ensure_grad(), r, c) +=
                           cview(self.grad, c, r).transpose();
                     });
}

namespace {

enum class Broadcast { kSame, kScalar, kRow };

Broadcast classify(const Tensor& big, const Tensor& small, const char* op) {
  if (big.shape() == small.shape()) return Broadcast::kSame;
  if (small.numel() == 1) return Broadcast::kScalar;
  if (big.rank() <= 2 && small.rank() <= 2 && small.rows() == 1 &&
      small.cols() == big.cols()) {
    return Broadcast::kRow;
  }
  throw DimensionError(std::string(op) + ": cannot broadcast " +
                       shape_to_string(small.shape()) + " onto " +
                       shape_to_string(big.shape()));
}

Tensor add_signed(const Tensor& a, const Tensor& b, double sign,
                  const char* op) {
  // The broadcast operand may appear on either side.
  const bool swap = a.numel() < b.numel();
  const Tensor& big = swap ? b : a;
  const Tensor& small = swap ? a : b;
  const Broadcast mode = classify(big, small, op);
  const double small_sign = swap ? 1.0 : sign;
  const double big_sign = swap ? sign : 1.0;
  const auto& bd = big.node()->data;
  const auto& sd = small.node()->data;
  const std::size_t n = bd.size();
  const std::size_t cols = mode == Broadcast::kRow ? big.cols() : 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = mode == Broadcast::kSame     ? sd[i]
                     : mode == Broadcast::kScalar ? sd[0]
                                                  : sd[i % cols];
    out[i] = big_sign * bd[i] + small_sign * s;
  }
  const std::size_t big_idx = swap ? 1 : 0;
  const std::size_t small_idx = swap ? 0 : 1;
  return make_result(
      op, big.shape(), std::move(out), {a, b},
      [=](detail::Node& self) {
        const auto& g = self.grad;
        if (tracks(self, big_idx)) {
          auto gb = parent(self, big_idx).ensure_grad();
          for (std::size_t i = 0; i < n; ++i) gb[i] += big_sign * g[i];
        }
        if (tracks(self, small_idx)) {
          auto gs = parent(self, small_idx).ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = mode == Broadcast::kSame     ? i
                                  : mode == Broadcast::kScalar ? 0
                                                               : i % cols;
            gs[j] += small_sign * g[i];
          }
        }
      });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return add_signed(a, b, 1.0, "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return add_signed(a, b, -1.0, "sub");
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v *= factor;
  return make_result("scale", x.shape(), std::move(out), {x},
                     [factor](detail::Node& self) {
                       auto g = parent(self, 0).ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         g[i] += factor * self.grad[i];
                       }
                     });
}

Tensor tanh(const Tensor& x) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v = std::tanh(v);
  return make_result("tanh", x.shape(), std::move(out), {x},
                     [](detail::Node& self) {
                       auto g = parent(self, 0).ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const double y = self.data[i];
                         g[i] += (1.0 - y * y) * self.grad[i];
                       }
                     });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return make_result("relu", x.shape(), std::move(out), {x},
                     [](detail::Node& self) {
                       auto g = parent(self, 0).ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         if (self.data[i] > 0.0) g[i] += self.grad[i];
                       }
                     });
}

Tensor elementwise(ElementwiseOp op, const Tensor& x, const Tensor& other,
                   double factor) {
  switch (op) {
    case ElementwiseOp::kTanh:
      return tanh(x);
    case ElementwiseOp::kRelu:
      return relu(x);
    case ElementwiseOp::kAdd:
      if (!other.defined()) throw DimensionError("add needs a second operand");
      return add(x, other);
    case ElementwiseOp::kScale:
      return scale(x, factor);
  }
  throw DimensionError("unknown elementwise op");
}

Tensor softmax_columns(const Tensor& x) {
  require_rank2_or_less(x, "softmax_columns");
  const std::size_t r = x.rows(), c = x.cols();
  const auto& in = x.node()->data;
  std::vector<double> out(r * c);
  for (std::size_t j = 0; j < c; ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r; ++i) {
      const double v = in[i * c + j];
      if (!std::isfinite(v)) {
        throw NumericError("softmax_columns: non-finite input");
      }
      mx = std::max(mx, v);
    }
    double z = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      out[i * c + j] = std::exp(in[i * c + j] - mx);
      z += out[i * c + j];
    }
    for (std::size_t i = 0; i < r; ++i) out[i * c + j] /= z;
  }
  return make_result("softmax_columns", x.shape(), std::move(out), {x},
                     [r, c](detail::Node& self) {
                       auto g = parent(self, 0).ensure_grad();
                       const auto& y = self.data;
                       const auto& dy = self.grad;
                       for (std::size_t j = 0; j < c; ++j) {
                         double dot = 0.0;
                         for (std::size_t i = 0; i < r; ++i) {
                           dot += y[i * c + j] * dy[i * c + j];
                         }
                         for (std::size_t i = 0; i < r; ++i) {
                           g[i * c + j] += y[i * c + j] * (dy[i * c + j] - dot);
                         }
                       }
                     });
}

Tensor frobenius_sq(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  return make_result("frobenius_sq", {}, {s}, {x}, [](detail::Node& self) {
    auto& p = parent(self, 0);
    auto g = p.ensure_grad();
    const double up = self.grad[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * p.data[i] * up;
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_result("sum", {}, {s}, {x}, [](detail::Node& self) {
    auto g = parent(self, 0).ensure_grad();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_to_string(x.shape()) +
                         " as " + shape_to_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result("reshape", std::move(shape), std::move(out), {x},
                     [](detail::Node& self) {
                       auto g = parent(self, 0).ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         g[i] += self.grad[i];
                       }
                     });
}

Tensor flatten_row(const Tensor& x) { return reshape(x, {1, x.numel()}); }

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  for (const Tensor& p : parts) {
    require_rank2_or_less(p, "concat_rows");
    if (p.cols() != c) {
      throw DimensionError("concat_rows: column mismatch " +
                           shape_to_string(parts[0].shape()) + " vs " +
                           shape_to_string(p.shape()));
    }
    r += p.rows();
  }
  std::vector<double> out;
  out.reserve(r * c);
  std::vector<std::size_t> sizes;
  for (const Tensor& p : parts) {
    out.insert(out.end(), p.data().begin(), p.data().end());
    sizes.push_back(p.numel());
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_result("concat_rows", {r, c}, std::move(out), inputs,
                     [sizes](detail::Node& self) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < sizes.size(); ++k) {
                         if (tracks(self, k)) {
                           auto g = parent(self, k).ensure_grad();
                           for (std::size_t i = 0; i < sizes[k]; ++i) {
                             g[i] += self.grad[off + i];
                           }
                         }
                         off += sizes[k];
                       }
                     });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t c = 0;
  for (const Tensor& p : parts) {
    require_rank2_or_less(p, "concat_cols");
    if (p.rows() != r) {
      throw DimensionError("concat_cols: row mismatch " +
                           shape_to_string(parts[0].shape()) + " vs " +
                           shape_to_string(p.shape()));
    }
    widths.push_back(p.cols());
    c += p.cols();
  }
  std::vector<double> out(r * c);
  std::size_t col0 = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& d = parts[k].node()->data;
    for (std::size_t i = 0; i < r; ++i) {
      std::copy_n(d.begin() + static_cast<std::ptrdiff_t>(i * widths[k]),
                  widths[k],
                  out.begin() + static_cast<std::ptrdiff_t>(i * c + col0));
    }
    col0 += widths[k];
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_result("concat_cols", {r, c}, std::move(out), inputs,
                     [widths, r, c](detail::Node& self) {
                       std::size_t col = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         if (tracks(self, k)) {
                           auto g = parent(self, k).ensure_grad();
                           for (std::size_t i = 0; i < r; ++i) {
                             for (std::size_t j = 0; j < widths[k]; ++j) {
                               g[i * widths[k] + j] +=
                                   self.grad[i * c + col + j];
                             }
                           }
                         }
                         col += widths[k];
                       }
                     });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank2_or_less(x, "slice_rows");
  if (begin >= end || end > x.rows()) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") invalid for " +
                         shape_to_string(x.shape()));
  }
  const std::size_t c = x.cols();
  auto first = x.data().begin() + static_cast<std::ptrdiff_t>(begin * c);
  std::vector<double> out(first, first + static_cast<std::ptrdiff_t>((end - begin) * c));
  return make_result("slice_rows", {end - begin, c}, std::move(out), {x},
                     [begin, c](detail::Node& self) {
                       auto g = parent(self, 0).ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i) {
                         g[begin * c + i] += self.grad[i];
                       }
                     });
}

Tensor normalize_columns(const Tensor& x) {
  require_rank2_or_less(x, "normalize_columns");
  const std::size_t r = x.rows(), c = x.cols();
  const auto& in = x.node()->data;
  std::vector<double> norms(c, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) norms[j] += in[i * c + j] * in[i * c + j];
  }
  for (std::size_t j = 0; j < c; ++j) {
    norms[j] = std::sqrt(norms[j]);
    if (norms[j] == 0.0) {
      throw NumericError("normalize_columns: column " + std::to_string(j) +
                         " has zero norm");
    }
  }
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = in[i * c + j] / norms[j];
  }
  return make_result("normalize_columns", x.shape(), std::move(out), {x},
                     [r, c, norms](detail::Node& self) {
                       auto g = parent(self, 0).ensure_grad();
                       const auto& y = self.data;
                       const auto& dy = self.grad;
                       for (std::size_t j = 0; j < c; ++j) {
                         double dot = 0.0;
                         for (std::size_t i = 0; i < r; ++i) {
                           dot += y[i * c + j] * dy[i * c + j];
                         }
                         for (std::size_t i = 0; i < r; ++i) {
                           g[i * c + j] +=
                               (dy[i * c + j] - y[i * c + j] * dot) / norms[j];
                         }
                       }
                     });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank2_or_less(logits, "cross_entropy");
  const std::size_t r = logits.rows(), c = logits.cols();
  if (labels.size() != r) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(r) + " rows");
  }
  const auto& z = logits.node()->data;
  std::vector<double> probs(r * c);
  double loss = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= c) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(label) +
                              " outside [0, " + std::to_string(c) + ")");
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, z[i * c + j]);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(z[i * c + j] - mx);
    const double log_z = mx + std::log(s);
    for (std::size_t j = 0; j < c; ++j) {
      probs[i * c + j] = std::exp(z[i * c + j] - log_z);
    }
    loss += log_z - z[i * c + static_cast<std::size_t>(label)];
  }
  loss /= static_cast<double>(r);
  std::vector<int> saved(labels.begin(), labels.end());
  return make_result(
      "cross_entropy", {}, {loss}, {logits},
      [r, c, probs = std::move(probs), saved = std::move(saved)](
          detail::Node& self) {
        auto g = parent(self, 0).ensure_grad();
        const double up = self.grad[0] / static_cast<double>(r);
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < c; ++j) {
            const double target =
                static_cast<int>(j) == saved[i] ? 1.0 : 0.0;
            g[i * c + j] += up * (probs[i * c + j] - target);
          }
        }
      });
}

Tensor splice_frames(const Tensor& x, std::span<const int> offsets) {
  require_rank2_or_less(x, "splice_frames");
  if (offsets.empty()) throw DimensionError("splice_frames: no offsets");
  const std::size_t t_len = x.rows(), f = x.cols(), m = offsets.size();
  const auto& in = x.node()->data;
  std::vector<std::size_t> src(t_len * m);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t k = 0; k < m; ++k) {
      const long idx = std::clamp(static_cast<long>(t) + offsets[k], 0L,
                                  static_cast<long>(t_len) - 1);
      src[t * m + k] = static_cast<std::size_t>(idx);
    }
  }
  std::vector<double> out(t_len * m * f);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t k = 0; k < m; ++k) {
      std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(src[t * m + k] * f), f,
                  out.begin() + static_cast<std::ptrdiff_t>((t * m + k) * f));
    }
  }
  return make_result("splice_frames", {t_len, m * f}, std::move(out), {x},
                     [src = std::move(src), t_len, m, f](detail::Node& self) {
                       auto g = parent(self, 0).ensure_grad();
                       for (std::size_t t = 0; t < t_len; ++t) {
                         for (std::size_t k = 0; k < m; ++k) {
                           const double* dy = &self.grad[(t * m + k) * f];
                           double* dx = &g[src[t * m + k] * f];
                           for (std::size_t i = 0; i < f; ++i) dx[i] += dy[i];
                         }
                       }
                     });
}

Tensor recurrent_relu(const Tensor& drive, std::span<const Tensor> recurrent,
                      std::span<const int> lags) {
  require_rank2_or_less(drive, "recurrent_relu");
  if (recurrent.size() != lags.size()) {
    throw DimensionError("recurrent_relu: " + std::to_string(recurrent.size()) +
                         " matrices for " + std::to_string(lags.size()) +
                         " lags");
  }
  const std::size_t t_len = drive.rows(), d = drive.cols();
  for (std::size_t j = 0; j < recurrent.size(); ++j) {
    if (recurrent[j].rows() != d || recurrent[j].cols() != d) {
      throw DimensionError("recurrent_relu: recurrent matrix " +
                           shape_to_string(recurrent[j].shape()) +
                           " does not match state width " + std::to_string(d));
    }
    if (lags[j] <= 0) throw DimensionError("recurrent_relu: lags must be positive");
  }
  std::vector<int> lag_vec(lags.begin(), lags.end());
  std::vector<double> out(drive.data().begin(), drive.data().end());
  auto s = mview(out, t_len, d);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t j = 0; j < lag_vec.size(); ++j) {
      const auto lag = static_cast<std::size_t>(lag_vec[j]);
      if (t < lag) continue;
      s.row(static_cast<Eigen::Index>(t)).noalias() +=
          s.row(static_cast<Eigen::Index>(t - lag)) *
          cview(recurrent[j].node()->data, d, d);
    }
    s.row(static_cast<Eigen::Index>(t)) =
        s.row(static_cast<Eigen::Index>(t)).cwiseMax(0.0);
  }
  std::vector<Tensor> inputs;
  inputs.push_back(drive);
  inputs.insert(inputs.end(), recurrent.begin(), recurrent.end());
  return make_result(
      "recurrent_relu", {t_len, d}, std::move(out), inputs,
      [t_len, d, lag_vec](detail::Node& self) {
        const auto states = cview(self.data, t_len, d);
        // Carried gradient w.r.t. each state row; starts as the upstream grad.
        RowMatrix carry = cview(self.grad, t_len, d);
        Eigen::RowVectorXd dz(static_cast<Eigen::Index>(d));
        const bool want_drive = tracks(self, 0);
        for (std::size_t t = t_len; t-- > 0;) {
          const auto ti = static_cast<Eigen::Index>(t);
          for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(d); ++i) {
            dz(i) = states(ti, i) > 0.0 ? carry(ti, i) : 0.0;
          }
          if (want_drive) {
            mview(parent(self, 0).ensure_grad(), t_len, d).row(ti) += dz;
          }
          for (std::size_t j = 0; j < lag_vec.size(); ++j) {
            const auto lag = static_cast<std::size_t>(lag_vec[j]);
            if (t < lag) continue;
            const auto src = static_cast<Eigen::Index>(t - lag);
            auto& u = parent(self, j + 1);
            if (u.requires_grad) {
              mview(u.ensure_grad(), d, d).noalias() +=
                  states.row(src).transpose() * dz;
            }
            carry.row(src).noalias() += dz * cview(u.data, d, d).transpose();
          }
        }
      });
}

}  // namespace cvec
