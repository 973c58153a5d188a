#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace contactnet {

// Dense row-major n-dimensional array.
template <class T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel(shape), T(0));
  }
  Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<size_t>(numel(shape)) != data.size())
      throw std::invalid_argument("tensor: shape/data mismatch");
  }

  static int64_t numel(const std::vector<int>& s) {
    int64_t n = 1;
    for (int e : s) n *= e;
    return n;
  }
  int64_t size() const { return static_cast<int64_t>(data.size()); }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, T v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor scalar(T v) { return Tensor({1}, {v}); }

  int rows() const { return shape.size() == 2 ? shape[0] : throw_rank2(); }
  int cols() const { return shape.size() == 2 ? shape[1] : throw_rank2(); }
  static int throw_rank2() { throw std::logic_error("tensor: expected rank 2"); }

  T& at2(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
  T at2(int i, int j) const { return data[static_cast<size_t>(i) * shape[1] + j]; }
  T& at3(int i, int j, int k) {
    return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
  }
  T at3(int i, int j, int k) const {
    return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  bool all_finite() const {
    for (T v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }
};

enum class ConvPadding { Same, Valid };

// Eager tape: every primitive computes its output immediately and records a
// backward closure. Node ids are appended in evaluation order, so reverse id
// order is a valid reverse topological order. Single-owner: one tape per
// concurrent evaluation.
template <class T>
class Tape {
 public:
  using Ref = int;

  Ref input(Tensor<T> v, bool requires_grad) {
    return push(std::move(v), requires_grad, nullptr);
  }
  Ref constant(Tensor<T> v) { return push(std::move(v), false, nullptr); }

  const Tensor<T>& value(Ref id) const { return nodes_[id].value; }
  // Allocates a zero buffer on first access, so unused parameters read as 0.
  const Tensor<T>& grad(Ref id) { return grad_buf(id); }
  size_t size() const { return nodes_.size(); }

  // ---- primitives ----

  Ref add(Ref a, Ref b) {
    const Tensor<T>&va = val(a), &vb = val(b);
    require(va.shape == vb.shape, "add", va, vb);
    Tensor<T> out = va;
    for (int64_t i = 0; i < out.size(); ++i) out.data[i] += vb.data[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, Ref self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      if (t.needs(a)) {
        Tensor<T>& ga = t.grad_buf(a);
        for (int64_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
      }
      if (t.needs(b)) {
        Tensor<T>& gb = t.grad_buf(b);
        for (int64_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i];
      }
    });
  }

  Ref mul(Ref a, Ref b) {
    const Tensor<T>&va = val(a), &vb = val(b);
    require(va.shape == vb.shape, "mul", va, vb);
    Tensor<T> out = va;
    for (int64_t i = 0; i < out.size(); ++i) out.data[i] *= vb.data[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, Ref self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      const Tensor<T>&va = t.val(a), &vb = t.val(b);
      if (t.needs(a)) {
        Tensor<T>& ga = t.grad_buf(a);
        for (int64_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * vb.data[i];
      }
      if (t.needs(b)) {
        Tensor<T>& gb = t.grad_buf(b);
        for (int64_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * va.data[i];
      }
    });
  }

  Ref scale(Ref a, T c) {
    Tensor<T> out = val(a);
    for (T& v : out.data) v *= c;
    return push(std::move(out), needs(a), [a, c](Tape& t, Ref self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      if (!t.needs(a)) return;
      Tensor<T>& ga = t.grad_buf(a);
      for (int64_t i = 0; i < g.size(); ++i) ga.data[i] += c * g.data[i];
    });
  }

  Ref matmul(Ref a, Ref b) {
    const Tensor<T>&va = val(a), &vb = val(b);
    require(va.shape.size() == 2 && vb.shape.size() == 2 && va.shape[1] == vb.shape[0],
            "matmul", va, vb);
    const int n = va.shape[0], k = va.shape[1], m = vb.shape[1];
    Tensor<T> out({n, m});
    gemm(va.data.data(), vb.data.data(), out.data.data(), n, k, m);
    return push(std::move(out), needs(a) || needs(b), [a, b, n, k, m](Tape& t, Ref self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      const Tensor<T>&va = t.val(a), &vb = t.val(b);
      if (t.needs(a)) {  // ga += g @ b^T
        Tensor<T>& ga = t.grad_buf(a);
        for (int i = 0; i < n; ++i) {
          const T* grow = g.data.data() + static_cast<size_t>(i) * m;
          T* garow = ga.data.data() + static_cast<size_t>(i) * k;
          for (int kk = 0; kk < k; ++kk) {
            const T* brow = vb.data.data() + static_cast<size_t>(kk) * m;
            T acc = T(0);
            for (int j = 0; j < m; ++j) acc += grow[j] * brow[j];
            garow[kk] += acc;
          }
        }
      }
      if (t.needs(b)) {  // gb += a^T @ g
        Tensor<T>& gb = t.grad_buf(b);
        for (int i = 0; i < n; ++i) {
          const T* arow = va.data.data() + static_cast<size_t>(i) * k;
          const T* grow = g.data.data() + static_cast<size_t>(i) * m;
          for (int kk = 0; kk < k; ++kk) {
            T aik = arow[kk];
            if (aik == T(0)) continue;
            T* gbrow = gb.data.data() + static_cast<size_t>(kk) * m;
            for (int j = 0; j < m; ++j) gbrow[j] += aik * grow[j];
          }
        }
      }
    });
  }

  Ref transpose(Ref a) {
    const Tensor<T>& va = val(a);
    require(va.shape.size() == 2, "transpose", va, va);
    const int n = va.shape[0], m = va.shape[1];
    Tensor<T> out({m, n});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) out.at2(j, i) = va.at2(i, j);
    return push(std::move(out), needs(a), [a, n, m](Tape& t, Ref self) {
      if (!t.needs(a)) return;
      const Tensor<T>& g = t.nodes_[self].grad;
      Tensor<T>& ga = t.grad_buf(a);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) ga.at2(i, j) += g.at2(j, i);
    });
  }

  // Concatenate rank-2 tensors along axis 0 or 1.
  Ref concat(int axis, const std::vector<Ref>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    const Tensor<T>& first = val(parts[0]);
    require(first.shape.size() == 2 && (axis == 0 || axis == 1), "concat", first, first);
    int other = 1 - axis;
    int total = 0;
    for (Ref p : parts) {
      const Tensor<T>& v = val(p);
      require(v.shape.size() == 2 && v.shape[other] == first.shape[other], "concat", v, first);
      total += v.shape[axis];
    }
    std::vector<int> oshape = first.shape;
    oshape[axis] = total;
    Tensor<T> out(oshape);
    int offset = 0;
    for (Ref p : parts) {
      const Tensor<T>& v = val(p);
      if (axis == 0) {
        std::copy(v.data.begin(), v.data.end(),
                  out.data.begin() + static_cast<size_t>(offset) * out.shape[1]);
      } else {
        for (int i = 0; i < v.shape[0]; ++i)
          for (int j = 0; j < v.shape[1]; ++j) out.at2(i, offset + j) = v.at2(i, j);
      }
      offset += v.shape[axis];
    }
    bool rg = false;
    for (Ref p : parts) rg = rg || needs(p);
    std::vector<Ref> ps = parts;
    return push(std::move(out), rg, [ps, axis](Tape& t, Ref self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      int offset = 0;
      for (Ref p : ps) {
        const Tensor<T>& v = t.val(p);
        if (t.needs(p)) {
          Tensor<T>& gp = t.grad_buf(p);
          if (axis == 0) {
            for (int i = 0; i < v.shape[0]; ++i)
              for (int j = 0; j < v.shape[1]; ++j) gp.at2(i, j) += g.at2(offset + i, j);
          } else {
            for (int i = 0; i < v.shape[0]; ++i)
              for (int j = 0; j < v.shape[1]; ++j) gp.at2(i, j) += g.at2(i, offset + j);
          }
        }
        offset += v.shape[axis];
      }
    });
  }

  Ref slice(Ref a, int axis, int start, int len) {
    const Tensor<T>& va = val(a);
    require(va.shape.size() == 2 && (axis == 0 || axis == 1), "slice", va, va);
    require(start >= 0 && len >= 1 && start + len <= va.shape[axis], "slice", va, va);
    std::vector<int> oshape = va.shape;
    oshape[axis] = len;
    Tensor<T> out(oshape);
    for (int i = 0; i < out.shape[0]; ++i)
      for (int j = 0; j < out.shape[1]; ++j)
        out.at2(i, j) = axis == 0 ? va.at2(start + i, j) : va.at2(i, start + j);
    return push(std::move(out), needs(a), [a, axis, start](Tape& t, Ref self) {
      if (!t.needs(a)) return;
      const Tensor<T>& g = t.nodes_[self].grad;
      Tensor<T>& ga = t.grad_buf(a);
      for (int i = 0; i < g.shape[0]; ++i)
        for (int j = 0; j < g.shape[1]; ++j) {
          if (axis == 0)
            ga.at2(start + i, j) += g.at2(i, j);
          else
            ga.at2(i, start + j) += g.at2(i, j);
        }
    });
  }

  // Rows start..start+len-1 of a rank-2 tensor; out-of-range rows are zero.
  Ref pad_slice_rows(Ref a, int start, int len) {
    const Tensor<T>& va = val(a);
    require(va.shape.size() == 2 && len >= 1, "pad_slice_rows", va, va);
    const int n = va.shape[0], d = va.shape[1];
    Tensor<T> out({len, d});
    for (int r = 0; r < len; ++r) {
      int src = start + r;
      if (src < 0 || src >= n) continue;
      std::copy(va.data.begin() + static_cast<size_t>(src) * d,
                va.data.begin() + static_cast<size_t>(src + 1) * d,
                out.data.begin() + static_cast<size_t>(r) * d);
    }
    return push(std::move(out), needs(a), [a, start, n, d](Tape& t, Ref self) {
      if (!t.needs(a)) return;
      const Tensor<T>& g = t.nodes_[self].grad;
      Tensor<T>& ga = t.grad_buf(a);
      for (int r = 0; r < g.shape[0]; ++r) {
        int src = start + r;
        if (src < 0 || src >= n) continue;
        for (int j = 0; j < d; ++j) ga.at2(src, j) += g.at2(r, j);
      }
    });
  }

  Ref relu(Ref a) {
    Tensor<T> out = val(a);
    for (T& v : out.data) v = v > T(0) ? v : T(0);
    return push(std::move(out), needs(a), [a](Tape& t, Ref self) {
      if (!t.needs(a)) return;
      const Tensor<T>& g = t.nodes_[self].grad;
      const Tensor<T>& va = t.val(a);
      Tensor<T>& ga = t.grad_buf(a);
      for (int64_t i = 0; i < g.size(); ++i)
        if (va.data[i] > T(0)) ga.data[i] += g.data[i];
    });
  }

  // tanh approximation with the usual constants.
  Ref gelu(Ref a) {
    const T c0 = T(0.7978845608028654);  // sqrt(2/pi)
    const T c1 = T(0.044715);
    Tensor<T> out = val(a);
    for (T& v : out.data) {
      T u = c0 * (v + c1 * v * v * v);
      v = T(0.5) * v * (T(1) + std::tanh(u));
    }
    return push(std::move(out), needs(a), [a, c0, c1](Tape& t, Ref self) {
      if (!t.needs(a)) return;
      const Tensor<T>& g = t.nodes_[self].grad;
      const Tensor<T>& va = t.val(a);
      Tensor<T>& ga = t.grad_buf(a);
      for (int64_t i = 0; i < g.size(); ++i) {
        T x = va.data[i];
        T u = c0 * (x + c1 * x * x * x);
        T th = std::tanh(u);
        T du = c0 * (T(1) + T(3) * c1 * x * x);
        T dy = T(0.5) * (T(1) + th) + T(0.5) * x * (T(1) - th * th) * du;
        ga.data[i] += g.data[i] * dy;
      }
    });
  }

  // Per-row softmax over unmasked columns; output is exactly 0 at masked
  // positions. A fully masked row yields all zeros.
  Ref masked_softmax_rows(Ref a, Ref mask) {
    const Tensor<T>&va = val(a), &vm = val(mask);
    require(va.shape.size() == 2 && va.shape == vm.shape, "masked_softmax", va, vm);
    const int n = va.shape[0], m = va.shape[1];
    Tensor<T> out({n, m});
    for (int i = 0; i < n; ++i) {
      T mx = -std::numeric_limits<T>::infinity();
      for (int j = 0; j < m; ++j)
        if (vm.at2(i, j) != T(0)) mx = std::max(mx, va.at2(i, j));
      if (!std::isfinite(static_cast<double>(mx))) continue;  // fully masked row
      T sum = T(0);
      for (int j = 0; j < m; ++j) {
        if (vm.at2(i, j) != T(0)) {
          T e = std::exp(va.at2(i, j) - mx);
          out.at2(i, j) = e;
          sum += e;
        }
      }
      for (int j = 0; j < m; ++j) out.at2(i, j) /= sum;
    }
    return push(std::move(out), needs(a), [a, n, m](Tape& t, Ref self) {
      if (!t.needs(a)) return;
      const Tensor<T>& g = t.nodes_[self].grad;
      const Tensor<T>& y = t.nodes_[self].value;
      Tensor<T>& ga = t.grad_buf(a);
      for (int i = 0; i < n; ++i) {
        T dot = T(0);
        for (int j = 0; j < m; ++j) dot += g.at2(i, j) * y.at2(i, j);
        for (int j = 0; j < m; ++j)
          ga.at2(i, j) += y.at2(i, j) * (g.at2(i, j) - dot);
      }
    });
  }

  // Row-wise layer norm (biased variance) followed by affine gain/shift.
  Ref layer_norm_rows(Ref a, Ref gain, Ref shift, T eps = T(1e-5)) {
    const Tensor<T>&va = val(a), &vg = val(gain), &vs = val(shift);
    require(va.shape.size() == 2 && vg.shape == std::vector<int>{va.shape[1]} &&
                vs.shape == vg.shape,
            "layer_norm", va, vg);
    const int n = va.shape[0], d = va.shape[1];
    Tensor<T> out({n, d});
    Tensor<T> xhat({n, d});
    std::vector<T> inv_std(n);
    for (int i = 0; i < n; ++i) {
      T mu = T(0);
      for (int j = 0; j < d; ++j) mu += va.at2(i, j);
      mu /= T(d);
      T var = T(0);
      for (int j = 0; j < d; ++j) {
        T c = va.at2(i, j) - mu;
        var += c * c;
      }
      var /= T(d);
      T is = T(1) / std::sqrt(var + eps);
      inv_std[i] = is;
      for (int j = 0; j < d; ++j) {
        T xh = (va.at2(i, j) - mu) * is;
        xhat.at2(i, j) = xh;
        out.at2(i, j) = xh * vg.data[j] + vs.data[j];
      }
    }
    auto xh_store = std::make_shared<Tensor<T>>(std::move(xhat));
    auto is_store = std::make_shared<std::vector<T>>(std::move(inv_std));
    return push(std::move(out), needs(a) || needs(gain) || needs(shift),
                [a, gain, shift, n, d, xh_store, is_store](Tape& t, Ref self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      const Tensor<T>& vg = t.val(gain);
      const Tensor<T>& xh = *xh_store;
      if (t.needs(gain)) {
        Tensor<T>& gg = t.grad_buf(gain);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < d; ++j) gg.data[j] += g.at2(i, j) * xh.at2(i, j);
      }
      if (t.needs(shift)) {
        Tensor<T>& gs = t.grad_buf(shift);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < d; ++j) gs.data[j] += g.at2(i, j);
      }
      if (t.needs(a)) {
        Tensor<T>& ga = t.grad_buf(a);
        for (int i = 0; i < n; ++i) {
          T mean_h = T(0), mean_hx = T(0);
          for (int j = 0; j < d; ++j) {
            T h = g.at2(i, j) * vg.data[j];
            mean_h += h;
            mean_hx += h * xh.at2(i, j);
          }
          mean_h /= T(d);
          mean_hx /= T(d);
          for (int j = 0; j < d; ++j) {
            T h = g.at2(i, j) * vg.data[j];
            ga.at2(i, j) += (h - mean_h - xh.at2(i, j) * mean_hx) * (*is_store)[i];
          }
        }
      }
    });
  }

  // Rank-2 input plus a length-cols bias vector broadcast over rows.
  Ref add_bias(Ref a, Ref b) {
    const Tensor<T>&va = val(a), &vb = val(b);
    require(va.shape.size() == 2 && vb.shape == std::vector<int>{va.shape[1]},
            "add_bias", va, vb);
    const int n = va.shape[0], d = va.shape[1];
    Tensor<T> out = va;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) out.at2(i, j) += vb.data[j];
    return push(std::move(out), needs(a) || needs(b), [a, b, n, d](Tape& t, Ref self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      if (t.needs(a)) {
        Tensor<T>& ga = t.grad_buf(a);
        for (int64_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
      }
      if (t.needs(b)) {
        Tensor<T>& gb = t.grad_buf(b);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < d; ++j) gb.data[j] += g.at2(i, j);
      }
    });
  }

  // x @ w + bias, the usual affine map.
  Ref linear(Ref x, Ref w, Ref b) { return add_bias(matmul(x, w), b); }

  // Input (H,W,Cin), kernel (kh,kw,Cin,Cout), bias (Cout), stride 1.
  Ref conv2d(Ref x, Ref kernel, Ref bias, ConvPadding padding) {
    const Tensor<T>&vx = val(x), &vk = val(kernel), &vb = val(bias);
    require(vx.shape.size() == 3 && vk.shape.size() == 4 && vk.shape[2] == vx.shape[2] &&
                vb.shape == std::vector<int>{vk.shape[3]},
            "conv2d", vx, vk);
    const int h = vx.shape[0], w = vx.shape[1], cin = vx.shape[2];
    const int kh = vk.shape[0], kw = vk.shape[1], cout = vk.shape[3];
    const int py = padding == ConvPadding::Same ? (kh - 1) / 2 : 0;
    const int px = padding == ConvPadding::Same ? (kw - 1) / 2 : 0;
    const int oh = padding == ConvPadding::Same ? h : h - kh + 1;
    const int ow = padding == ConvPadding::Same ? w : w - kw + 1;
    require(oh >= 1 && ow >= 1, "conv2d", vx, vk);

    Tensor<T> out({oh, ow, cout});
    for (int y = 0; y < oh; ++y)
      for (int xx = 0; xx < ow; ++xx) {
        T* orow = out.data.data() + (static_cast<size_t>(y) * ow + xx) * cout;
        for (int co = 0; co < cout; ++co) orow[co] = vb.data[co];
        for (int ky = 0; ky < kh; ++ky) {
          int iy = y + ky - py;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            int ix = xx + kx - px;
            if (ix < 0 || ix >= w) continue;
            const T* irow = vx.data.data() + (static_cast<size_t>(iy) * w + ix) * cin;
            const T* krow = vk.data.data() +
                            ((static_cast<size_t>(ky) * kw + kx) * cin) * cout;
            for (int ci = 0; ci < cin; ++ci) {
              T v = irow[ci];
              if (v == T(0)) continue;
              const T* kvec = krow + static_cast<size_t>(ci) * cout;
              for (int co = 0; co < cout; ++co) orow[co] += v * kvec[co];
            }
          }
        }
      }
    return push(std::move(out), needs(x) || needs(kernel) || needs(bias),
                [x, kernel, bias, h, w, cin, kh, kw, cout, py, px, oh, ow](Tape& t, Ref self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      const Tensor<T>&vx = t.val(x), &vk = t.val(kernel);
      bool nx = t.needs(x), nk = t.needs(kernel), nb = t.needs(bias);
      Tensor<T>* gx = nx ? &t.grad_buf(x) : nullptr;
      Tensor<T>* gk = nk ? &t.grad_buf(kernel) : nullptr;
      Tensor<T>* gb = nb ? &t.grad_buf(bias) : nullptr;
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          const T* grow = g.data.data() + (static_cast<size_t>(y) * ow + xx) * cout;
          if (nb)
            for (int co = 0; co < cout; ++co) gb->data[co] += grow[co];
          for (int ky = 0; ky < kh; ++ky) {
            int iy = y + ky - py;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              int ix = xx + kx - px;
              if (ix < 0 || ix >= w) continue;
              const size_t ibase = (static_cast<size_t>(iy) * w + ix) * cin;
              const size_t kbase = (static_cast<size_t>(ky) * kw + kx) * cin * cout;
              for (int ci = 0; ci < cin; ++ci) {
                const T* kvec = vk.data.data() + kbase + static_cast<size_t>(ci) * cout;
                T xv = vx.data[ibase + ci];
                T acc = T(0);
                for (int co = 0; co < cout; ++co) acc += grow[co] * kvec[co];
                if (nx) gx->data[ibase + ci] += acc;
                if (nk && xv != T(0)) {
                  T* gkvec = gk->data.data() + kbase + static_cast<size_t>(ci) * cout;
                  for (int co = 0; co < cout; ++co) gkvec[co] += xv * grow[co];
                }
              }
            }
          }
        }
    });
  }

  // 2x2 window, stride 2, trailing row/col dropped. Ties route the gradient
  // to the first maximum in scan order.
  Ref maxpool2d(Ref x) {
    const Tensor<T>& vx = val(x);
    require(vx.shape.size() == 3 && vx.shape[0] >= 2 && vx.shape[1] >= 2, "maxpool2d", vx, vx);
    const int h = vx.shape[0], w = vx.shape[1], c = vx.shape[2];
    const int oh = h / 2, ow = w / 2;
    Tensor<T> out({oh, ow, c});
    auto arg = std::make_shared<std::vector<int32_t>>(static_cast<size_t>(oh) * ow * c);
    for (int y = 0; y < oh; ++y)
      for (int xx = 0; xx < ow; ++xx)
        for (int ch = 0; ch < c; ++ch) {
          T best = -std::numeric_limits<T>::infinity();
          int best_idx = 0;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              int iy = 2 * y + dy, ix = 2 * xx + dx;
              T v = vx.at3(iy, ix, ch);
              if (v > best) {
                best = v;
                best_idx = static_cast<int>((static_cast<size_t>(iy) * w + ix) * c + ch);
              }
            }
          out.at3(y, xx, ch) = best;
          (*arg)[(static_cast<size_t>(y) * ow + xx) * c + ch] = best_idx;
        }
    return push(std::move(out), needs(x), [x, arg](Tape& t, Ref self) {
      if (!t.needs(x)) return;
      const Tensor<T>& g = t.nodes_[self].grad;
      Tensor<T>& gx = t.grad_buf(x);
      for (int64_t i = 0; i < g.size(); ++i) gx.data[(*arg)[i]] += g.data[i];
    });
  }

  // (H,W,C) -> (1,C) mean over the spatial extent.
  Ref global_mean_pool(Ref x) {
    const Tensor<T>& vx = val(x);
    require(vx.shape.size() == 3, "global_mean_pool", vx, vx);
    const int h = vx.shape[0], w = vx.shape[1], c = vx.shape[2];
    const T inv = T(1) / T(h * w);
    Tensor<T> out({1, c});
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx)
        for (int ch = 0; ch < c; ++ch) out.data[ch] += vx.at3(y, xx, ch);
    for (int ch = 0; ch < c; ++ch) out.data[ch] *= inv;
    return push(std::move(out), needs(x), [x, h, w, c, inv](Tape& t, Ref self) {
      if (!t.needs(x)) return;
      const Tensor<T>& g = t.nodes_[self].grad;
      Tensor<T>& gx = t.grad_buf(x);
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx)
          for (int ch = 0; ch < c; ++ch) gx.at3(y, xx, ch) += g.data[ch] * inv;
    });
  }

  // E(s,t) = [a_s ; b_t]: (ma,da) x (mb,db) -> (ma,mb,da+db).
  Ref cross_concat(Ref a, Ref b) {
    const Tensor<T>&va = val(a), &vb = val(b);
    require(va.shape.size() == 2 && vb.shape.size() == 2, "cross_concat", va, vb);
    const int ma = va.shape[0], da = va.shape[1];
    const int mb = vb.shape[0], db = vb.shape[1];
    Tensor<T> out({ma, mb, da + db});
    for (int s = 0; s < ma; ++s)
      for (int u = 0; u < mb; ++u) {
        T* row = out.data.data() + (static_cast<size_t>(s) * mb + u) * (da + db);
        const T* arow = va.data.data() + static_cast<size_t>(s) * da;
        const T* brow = vb.data.data() + static_cast<size_t>(u) * db;
        std::copy(arow, arow + da, row);
        std::copy(brow, brow + db, row + da);
      }
    return push(std::move(out), needs(a) || needs(b),
                [a, b, ma, da, mb, db](Tape& t, Ref self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      if (t.needs(a)) {
        Tensor<T>& ga = t.grad_buf(a);
        for (int s = 0; s < ma; ++s)
          for (int u = 0; u < mb; ++u) {
            const T* grow = g.data.data() + (static_cast<size_t>(s) * mb + u) * (da + db);
            T* garow = ga.data.data() + static_cast<size_t>(s) * da;
            for (int c = 0; c < da; ++c) garow[c] += grow[c];
          }
      }
      if (t.needs(b)) {
        Tensor<T>& gb = t.grad_buf(b);
        for (int s = 0; s < ma; ++s)
          for (int u = 0; u < mb; ++u) {
            const T* grow = g.data.data() + (static_cast<size_t>(s) * mb + u) * (da + db);
            T* gbrow = gb.data.data() + static_cast<size_t>(u) * db;
            for (int c = 0; c < db; ++c) gbrow[c] += grow[da + c];
          }
      }
    });
  }

  // Mean of the numerically stable binary cross-entropy over all elements;
  // labels are a constant tensor of the same extent with values in {0,1}.
  Ref bce_with_logits(Ref logits, const Tensor<T>& labels) {
    const Tensor<T>& vz = val(logits);
    require(vz.size() == labels.size(), "bce_with_logits", vz, labels);
    const int64_t n = vz.size();
    T loss = T(0);
    for (int64_t i = 0; i < n; ++i) {
      T z = vz.data[i], y = labels.data[i];
      loss += std::max(z, T(0)) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    loss /= T(n);
    auto labels_store = std::make_shared<Tensor<T>>(labels);
    return push(Tensor<T>::scalar(loss), needs(logits),
                [logits, labels_store, n](Tape& t, Ref self) {
      if (!t.needs(logits)) return;
      const T gs = t.nodes_[self].grad.data[0];
      const Tensor<T>& vz = t.val(logits);
      Tensor<T>& gz = t.grad_buf(logits);
      for (int64_t i = 0; i < n; ++i) {
        T z = vz.data[i];
        T s = T(1) / (T(1) + std::exp(-z));
        gz.data[i] += gs * (s - labels_store->data[i]) / T(n);
      }
    });
  }

  // Reverse accumulation from a scalar loss. Consumes the recorded closures;
  // grads accumulate across repeated calls only for leaf inputs.
  void backward(Ref loss) {
    const Tensor<T>& lv = val(loss);
    if (lv.size() != 1)
      throw std::invalid_argument("backward: loss must be scalar, got size " +
                                  std::to_string(lv.size()));
    grad_buf(loss).data[0] = T(1);
    for (Ref id = loss; id >= 0; --id) {
      Node& node = nodes_[id];
      if (!node.requires_grad || node.grad.data.empty() || !node.backward) continue;
      node.backward(*this, id);
    }
  }

  Tensor<T>& grad_buf(Ref id) {
    Node& n = nodes_[id];
    if (n.grad.data.empty()) n.grad = Tensor<T>::zeros(n.value.shape);
    return n.grad;
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    std::function<void(Tape&, Ref)> backward;
  };

  std::vector<Node> nodes_;

  const Tensor<T>& val(Ref id) const { return nodes_[id].value; }
  bool needs(Ref id) const { return nodes_[id].requires_grad; }

  Ref push(Tensor<T> value, bool requires_grad, std::function<void(Tape&, Ref)> bw) {
#ifndef NDEBUG
    assert(value.all_finite() && "non-finite forward output");
#endif
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward = std::move(bw);
    nodes_.push_back(std::move(n));
    return static_cast<Ref>(nodes_.size() - 1);
  }

  static void require(bool ok, const char* op, const Tensor<T>& a, const Tensor<T>& b) {
    if (ok) return;
    auto fmt = [](const std::vector<int>& s) {
      std::string r = "(";
      for (size_t i = 0; i < s.size(); ++i) r += (i ? "," : "") + std::to_string(s[i]);
      return r + ")";
    };
    throw std::invalid_argument(std::string("shape mismatch in ") + op + ": " +
                                fmt(a.shape) + " vs " + fmt(b.shape));
  }

  // C += none; plain ikj accumulation, deterministic row-major order.
  static void gemm(const T* a, const T* b, T* c, int n, int k, int m) {
    for (int i = 0; i < n; ++i) {
      T* crow = c + static_cast<size_t>(i) * m;
      const T* arow = a + static_cast<size_t>(i) * k;
      for (int kk = 0; kk < k; ++kk) {
        T aik = arow[kk];
        if (aik == T(0)) continue;
        const T* brow = b + static_cast<size_t>(kk) * m;
        for (int j = 0; j < m; ++j) crow[j] += aik * brow[j];
      }
    }
  }
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct GradCheckReport {
  double max_rel_error = 0.0;
  size_t coords_checked = 0;
  std::string worst_tensor;
  int worst_coord = -1;
  double worst_analytic = 0.0, worst_numeric = 0.0;
};

// Central finite differences over a random subsample of coordinates per
// parameter tensor. `fn` evaluates the scalar loss at the given parameter
// values; `analytic` holds the reverse-mode gradients at `params`.
inline GradCheckReport grad_check(
    const std::function<double(const std::vector<Tensor<double>>&)>& fn,
    std::vector<Tensor<double>> params,
    const std::vector<Tensor<double>>& analytic,
    const std::vector<std::string>& names,
    double eps = 1e-5, int max_coords_per_tensor = 200, uint64_t seed = 0) {
  GradCheckReport report;
  std::mt19937_64 rng(seed);
  for (size_t p = 0; p < params.size(); ++p) {
    const int64_t n = params[p].size();
    std::vector<int64_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    if (n > max_coords_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords_per_tensor);
    }
    for (int64_t c : coords) {
      double orig = params[p].data[c];
      params[p].data[c] = orig + eps;
      double f_plus = fn(params);
      params[p].data[c] = orig - eps;
      double f_minus = fn(params);
      params[p].data[c] = orig;
      double numeric = (f_plus - f_minus) / (2.0 * eps);
      double ad = analytic[p].data[c];
      double denom = std::max({std::abs(ad), std::abs(numeric), 1e-6});
      double rel = std::abs(ad - numeric) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_tensor = p < names.size() ? names[p] : std::to_string(p);
        report.worst_coord = static_cast<int>(c);
        report.worst_analytic = ad;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace contactnet
