#include "slt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace slt {

namespace {

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t axis = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for shape " +
                     shape_str(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.axis = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a 2-D tensor, got " + shape_str(a.shape()));
  }
}

const double* raw(const TensorImpl& t) { return t.data->data(); }
const double* parent_raw(const TensorImpl& out, std::size_t i) {
  return out.node->parents[i]->data->data();
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return make_result({m, n}, std::move(out), {a, b}, "matmul", [m, k, n](const TensorImpl& o) {
    const double* g = o.grad.data();
    const double* av = parent_raw(o, 0);
    const double* bv = parent_raw(o, 1);
    if (auto ga = parent_grad(o, 0); !ga.empty()) {
      // ga = g . b^T
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = bv + p * n;
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (auto gb = parent_grad(o, 1); !gb.empty()) {
      // gb = a^T . g
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double aval = av[i * k + p];
          double* gbrow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += aval * grow[j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  const auto d = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = d[i * n + j];
  return make_result({n, m}, std::move(out), {a}, "transpose", [m, n](const TensorImpl& o) {
    auto ga = parent_grad(o, 0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += o.grad[j * m + i];
  });
}

Tensor reshape(const Tensor& a, const Shape& shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result(shape, std::move(out), {a}, "reshape", [](const TensorImpl& o) {
    auto ga = parent_grad(o, 0);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += o.grad[i];
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  split_at(first, axis, "concat");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& t : parts) {
    const Shape& s = t.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == first[i];
    if (!ok) {
      throw ShapeError("concat: shape " + shape_str(s) + " incompatible with " +
                       shape_str(first) + " along axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
  }
  const AxisSplit os = split_at(out_shape, axis, "concat");
  std::vector<double> out(shape_numel(out_shape));
  std::vector<std::size_t> widths;  // axis*inner per part
  std::size_t offset = 0;
  for (const Tensor& t : parts) {
    const std::size_t w = t.dim(axis) * os.inner;
    const auto d = t.data();
    for (std::size_t o = 0; o < os.outer; ++o) {
      std::copy_n(d.begin() + o * w, w, out.begin() + o * os.axis * os.inner + offset);
    }
    widths.push_back(w);
    offset += w;
  }
  const std::size_t row = os.axis * os.inner;
  return make_result(out_shape, std::move(out), parts, "concat",
                     [widths, row, outer = os.outer](const TensorImpl& o) {
                       std::size_t off = 0;
                       for (std::size_t p = 0; p < widths.size(); ++p) {
                         auto gp = parent_grad(o, p);
                         const std::size_t w = widths[p];
                         if (!gp.empty()) {
                           for (std::size_t r = 0; r < outer; ++r)
                             for (std::size_t i = 0; i < w; ++i)
                               gp[r * w + i] += o.grad[r * row + off + i];
                         }
                         off += w;
                       }
                     });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length) {
  const AxisSplit s = split_at(a.shape(), axis, "slice");
  if (length == 0 || start + length > s.axis) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") out of bounds for " +
                     shape_str(a.shape()));
  }
  Shape out_shape = a.shape();
  out_shape[axis] = length;
  std::vector<double> out(shape_numel(out_shape));
  const auto d = a.data();
  const std::size_t in_row = s.axis * s.inner, out_row = length * s.inner, off = start * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(d.begin() + o * in_row + off, out_row, out.begin() + o * out_row);
  return make_result(out_shape, std::move(out), {a}, "slice",
                     [outer = s.outer, in_row, out_row, off](const TensorImpl& o) {
                       auto ga = parent_grad(o, 0);
                       for (std::size_t r = 0; r < outer; ++r)
                         for (std::size_t i = 0; i < out_row; ++i)
                           ga[r * in_row + off + i] += o.grad[r * out_row + i];
                     });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  const auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] + db[i];
  return make_result(a.shape(), std::move(out), {a, b}, "add", [](const TensorImpl& o) {
    for (std::size_t p = 0; p < 2; ++p) {
      auto g = parent_grad(o, p);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
  });
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "subtract");
  std::vector<double> out(a.numel());
  const auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] - db[i];
  return make_result(a.shape(), std::move(out), {a, b}, "subtract", [](const TensorImpl& o) {
    auto ga = parent_grad(o, 0);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += o.grad[i];
    auto gb = parent_grad(o, 1);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= o.grad[i];
  });
}

Tensor multiply(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "multiply");
  std::vector<double> out(a.numel());
  const auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] * db[i];
  return make_result(a.shape(), std::move(out), {a, b}, "multiply", [](const TensorImpl& o) {
    const double* av = parent_raw(o, 0);
    const double* bv = parent_raw(o, 1);
    auto ga = parent_grad(o, 0);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += o.grad[i] * bv[i];
    auto gb = parent_grad(o, 1);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += o.grad[i] * av[i];
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= factor;
  return make_result(a.shape(), std::move(out), {a}, "scale", [factor](const TensorImpl& o) {
    auto ga = parent_grad(o, 0);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += o.grad[i] * factor;
  });
}

Tensor add_scalar(const Tensor& a, double value) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v += value;
  return make_result(a.shape(), std::move(out), {a}, "add_scalar", [](const TensorImpl& o) {
    auto ga = parent_grad(o, 0);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += o.grad[i];
  });
}

Tensor add_rowwise(const Tensor& x, const Tensor& bias) {
  const std::size_t d = bias.numel();
  if (bias.rank() != 1 || x.shape().back() != d) {
    throw ShapeError("add_rowwise: bias " + shape_str(bias.shape()) + " does not match " +
                     shape_str(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto b = bias.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i % d];
  return make_result(x.shape(), std::move(out), {x, bias}, "add_rowwise",
                     [d](const TensorImpl& o) {
                       auto gx = parent_grad(o, 0);
                       for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += o.grad[i];
                       auto gb = parent_grad(o, 1);
                       if (!gb.empty()) {
                         for (std::size_t i = 0; i < o.grad.size(); ++i) gb[i % d] += o.grad[i];
                       }
                     });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result({1}, {s}, {a}, "sum", [](const TensorImpl& o) {
    auto ga = parent_grad(o, 0);
    for (double& g : ga) g += o.grad[0];
  });
}

Tensor mean(const Tensor& a, std::size_t axis) {
  const AxisSplit s = split_at(a.shape(), axis, "mean");
  Shape out_shape;
  for (std::size_t i = 0; i < a.rank(); ++i)
    if (i != axis) out_shape.push_back(a.shape()[i]);
  if (out_shape.empty()) out_shape = {1};
  std::vector<double> out(s.outer * s.inner, 0.0);
  const auto d = a.data();
  const double inv = 1.0 / static_cast<double>(s.axis);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < s.axis; ++k)
      for (std::size_t i = 0; i < s.inner; ++i)
        out[o * s.inner + i] += d[(o * s.axis + k) * s.inner + i];
  for (double& v : out) v *= inv;
  return make_result(out_shape, std::move(out), {a}, "mean", [s, inv](const TensorImpl& o) {
    auto ga = parent_grad(o, 0);
    for (std::size_t r = 0; r < s.outer; ++r)
      for (std::size_t k = 0; k < s.axis; ++k)
        for (std::size_t i = 0; i < s.inner; ++i)
          ga[(r * s.axis + k) * s.inner + i] += o.grad[r * s.inner + i] * inv;
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return make_result(a.shape(), std::move(out), {a}, "relu", [](const TensorImpl& o) {
    auto ga = parent_grad(o, 0);
    const double* y = raw(o);
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (y[i] > 0.0) ga[i] += o.grad[i];
  });
}

Tensor gelu(const Tensor& a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  std::vector<double> out(a.numel());
  const auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double u = c * (x[i] + 0.044715 * x[i] * x[i] * x[i]);
    out[i] = 0.5 * x[i] * (1.0 + std::tanh(u));
  }
  return make_result(a.shape(), std::move(out), {a}, "gelu", [c](const TensorImpl& o) {
    auto ga = parent_grad(o, 0);
    const double* x = parent_raw(o, 0);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double xi = x[i];
      const double u = c * (xi + 0.044715 * xi * xi * xi);
      const double t = std::tanh(u);
      const double du = c * (1.0 + 3.0 * 0.044715 * xi * xi);
      ga[i] += o.grad[i] * (0.5 * (1.0 + t) + 0.5 * xi * (1.0 - t * t) * du);
    }
  });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const AxisSplit s = split_at(x.shape(), axis, "softmax");
  std::vector<double> out(x.numel());
  const auto d = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.axis * s.inner + i;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < s.axis; ++k) mx = std::max(mx, d[base + k * s.inner]);
      double z = 0.0;
      for (std::size_t k = 0; k < s.axis; ++k) {
        const double e = std::exp(d[base + k * s.inner] - mx);
        out[base + k * s.inner] = e;
        z += e;
      }
      for (std::size_t k = 0; k < s.axis; ++k) out[base + k * s.inner] /= z;
    }
  }
  return make_result(x.shape(), std::move(out), {x}, "softmax", [s](const TensorImpl& o) {
    auto gx = parent_grad(o, 0);
    const double* y = raw(o);
    for (std::size_t r = 0; r < s.outer; ++r) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = r * s.axis * s.inner + i;
        double dot = 0.0;
        for (std::size_t k = 0; k < s.axis; ++k) {
          const std::size_t j = base + k * s.inner;
          dot += o.grad[j] * y[j];
        }
        for (std::size_t k = 0; k < s.axis; ++k) {
          const std::size_t j = base + k * s.inner;
          gx[j] += y[j] * (o.grad[j] - dot);
        }
      }
    }
  });
}

Tensor masked_softmax(const Tensor& x, std::span<const std::uint8_t> mask) {
  if (mask.size() != x.numel()) {
    throw ShapeError("masked_softmax: mask size " + std::to_string(mask.size()) +
                     " does not match " + shape_str(x.shape()));
  }
  const std::size_t cols = x.shape().back();
  const std::size_t rows = x.numel() / cols;
  std::vector<double> out(x.numel(), 0.0);
  const auto d = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cols; ++k)
      if (mask[base + k]) mx = std::max(mx, d[base + k]);
    if (mx == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (std::size_t k = 0; k < cols; ++k) {
      if (!mask[base + k]) continue;
      out[base + k] = std::exp(d[base + k] - mx);
      z += out[base + k];
    }
    for (std::size_t k = 0; k < cols; ++k) out[base + k] /= z;
  }
  return make_result(x.shape(), std::move(out), {x}, "masked_softmax",
                     [rows, cols](const TensorImpl& o) {
                       auto gx = parent_grad(o, 0);
                       const double* y = raw(o);
                       for (std::size_t r = 0; r < rows; ++r) {
                         const std::size_t base = r * cols;
                         double dot = 0.0;
                         for (std::size_t k = 0; k < cols; ++k) dot += o.grad[base + k] * y[base + k];
                         for (std::size_t k = 0; k < cols; ++k)
                           gx[base + k] += y[base + k] * (o.grad[base + k] - dot);
                       }
                     });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t d = x.shape().back();
  if (gamma.numel() != d || beta.numel() != d) {
    throw ShapeError("layer_norm: gamma/beta " + shape_str(gamma.shape()) + "/" +
                     shape_str(beta.shape()) + " do not match last dim of " +
                     shape_str(x.shape()));
  }
  const std::size_t rows = x.numel() / d;
  std::vector<double> out(x.numel());
  // Saved normalized values and inverse std per row.
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  const auto xv = x.data(), g = gamma.data(), b = beta.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * d;
    double mu = 0.0;
    for (std::size_t i = 0; i < d; ++i) mu += row[i];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t i = 0; i < d; ++i) {
      const double h = (row[i] - mu) * is;
      (*xhat)[r * d + i] = h;
      out[r * d + i] = h * g[i] + b[i];
    }
  }
  return make_result(
      x.shape(), std::move(out), {x, gamma, beta}, "layer_norm",
      [d, rows, xhat, inv_std](const TensorImpl& o) {
        const double* gv = parent_raw(o, 1);
        auto gx = parent_grad(o, 0);
        auto gg = parent_grad(o, 1);
        auto gb = parent_grad(o, 2);
        std::vector<double> dxhat(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* go = o.grad.data() + r * d;
          const double* h = xhat->data() + r * d;
          if (!gg.empty())
            for (std::size_t i = 0; i < d; ++i) gg[i] += go[i] * h[i];
          if (!gb.empty())
            for (std::size_t i = 0; i < d; ++i) gb[i] += go[i];
          if (gx.empty()) continue;
          double m1 = 0.0, m2 = 0.0;
          for (std::size_t i = 0; i < d; ++i) {
            dxhat[i] = go[i] * gv[i];
            m1 += dxhat[i];
            m2 += dxhat[i] * h[i];
          }
          m1 /= static_cast<double>(d);
          m2 /= static_cast<double>(d);
          const double is = (*inv_std)[r];
          for (std::size_t i = 0; i < d; ++i) gx[r * d + i] += is * (dxhat[i] - m1 - h[i] * m2);
        }
      });
}

Tensor dropout(const Tensor& x, double p, bool train, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ParameterError("dropout: probability must be in [0, 1), got " + std::to_string(p));
  }
  if (!train || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  auto factor = std::make_shared<std::vector<double>>(x.numel());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& f : *factor) f = u(rng) < p ? 0.0 : keep_scale;
  std::vector<double> out(x.numel());
  const auto d = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = d[i] * (*factor)[i];
  return make_result(x.shape(), std::move(out), {x}, "dropout", [factor](const TensorImpl& o) {
    auto gx = parent_grad(o, 0);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += o.grad[i] * (*factor)[i];
  });
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids) {
  require_rank2(table, "embedding_lookup");
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  if (ids.empty()) throw ShapeError("embedding_lookup: empty id sequence");
  std::vector<double> out(ids.size() * d);
  const auto t = table.data();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= vocab) {
      throw IndexError("embedding_lookup: id " + std::to_string(ids[r]) +
                       " out of range for table of " + std::to_string(vocab) + " rows");
    }
    std::copy_n(t.begin() + ids[r] * d, d, out.begin() + r * d);
  }
  std::vector<std::size_t> saved(ids.begin(), ids.end());
  return make_result({ids.size(), d}, std::move(out), {table}, "embedding_lookup",
                     [saved = std::move(saved), d](const TensorImpl& o) {
                       auto gt = parent_grad(o, 0);
                       for (std::size_t r = 0; r < saved.size(); ++r)
                         for (std::size_t i = 0; i < d; ++i)
                           gt[saved[r] * d + i] += o.grad[r * d + i];
                     });
}

Tensor cosine_similarity(const Tensor& u, const Tensor& v, double eps) {
  if (u.numel() != v.numel()) {
    throw ShapeError("cosine_similarity: sizes differ " + shape_str(u.shape()) + " vs " +
                     shape_str(v.shape()));
  }
  const auto a = u.data(), b = v.data();
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na2 += a[i] * a[i];
    nb2 += b[i] * b[i];
  }
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  const double denom = std::max(na * nb, eps);
  const double s = dot / denom;
  const bool clamped = na * nb < eps;
  return make_result({1}, {s}, {u, v}, "cosine_similarity",
                     [na2, nb2, denom, s, clamped](const TensorImpl& o) {
                       const double g = o.grad[0];
                       const double* a = parent_raw(o, 0);
                       const double* b = parent_raw(o, 1);
                       auto ga = parent_grad(o, 0);
                       auto gb = parent_grad(o, 1);
                       for (std::size_t i = 0; i < ga.size(); ++i) {
                         double d = b[i] / denom;
                         if (!clamped) d -= s * a[i] / na2;
                         ga[i] += g * d;
                       }
                       for (std::size_t i = 0; i < gb.size(); ++i) {
                         double d = a[i] / denom;
                         if (!clamped) d -= s * b[i] / nb2;
                         gb[i] += g * d;
                       }
                     });
}

Tensor cross_entropy_logits(const Tensor& logits, std::span<const std::size_t> targets,
                            std::size_t ignore_index) {
  require_rank2(logits, "cross_entropy_logits");
  const std::size_t rows = logits.dim(0), vocab = logits.dim(1);
  if (targets.size() != rows) {
    throw ShapeError("cross_entropy_logits: " + std::to_string(targets.size()) +
                     " targets for logits " + shape_str(logits.shape()));
  }
  const auto d = logits.data();
  auto probs = std::make_shared<std::vector<double>>(logits.numel(), 0.0);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] == ignore_index) continue;
    if (targets[r] >= vocab) {
      throw IndexError("cross_entropy_logits: target " + std::to_string(targets[r]) +
                       " out of range for vocabulary " + std::to_string(vocab));
    }
    const double* row = d.data() + r * vocab;
    const std::size_t arg = static_cast<std::size_t>(std::max_element(row, row + vocab) - row);
    const double mx = row[arg];
    // log z = log1p(sum of the non-max terms) keeps precision for confident rows.
    double rest = 0.0;
    for (std::size_t k = 0; k < vocab; ++k) {
      const double e = std::exp(row[k] - mx);
      (*probs)[r * vocab + k] = e;
      if (k != arg) rest += e;
    }
    const double z = 1.0 + rest;
    for (std::size_t k = 0; k < vocab; ++k) (*probs)[r * vocab + k] /= z;
    total += -(row[targets[r]] - mx - std::log1p(rest));
    ++count;
  }
  if (count == 0) throw UndefinedError("cross_entropy_logits: every position is ignored");
  std::vector<std::size_t> saved(targets.begin(), targets.end());
  const double inv = 1.0 / static_cast<double>(count);
  return make_result({1}, {total * inv}, {logits}, "cross_entropy_logits",
                     [probs, saved = std::move(saved), ignore_index, vocab,
                      inv](const TensorImpl& o) {
                       auto gl = parent_grad(o, 0);
                       const double g = o.grad[0] * inv;
                       for (std::size_t r = 0; r < saved.size(); ++r) {
                         if (saved[r] == ignore_index) continue;
                         for (std::size_t k = 0; k < vocab; ++k)
                           gl[r * vocab + k] += g * (*probs)[r * vocab + k];
                         gl[r * vocab + saved[r]] -= g;
                       }
                     });
}

}  // namespace slt
