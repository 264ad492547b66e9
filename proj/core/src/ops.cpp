#include "hsinoise/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace hsinoise {
namespace {

Tape* common_tape(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = nullptr;
  for (const Tensor* t : inputs) {
    if (!t->tape()) continue;
    if (tape && tape != t->tape()) {
      throw std::invalid_argument("operands recorded on different tapes");
    }
    tape = t->tape();
  }
  return tape;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  }
}

void require_scalar(const Tensor& s, const char* op) {
  if (s.size() != 1) {
    throw std::invalid_argument(std::string(op) + ": expected a single-element tensor, got " +
                                shape_string(s.shape()));
  }
}

Tensor finish(Tape* tape, Shape shape, std::vector<double> out, std::vector<Tensor> inputs,
              BackwardFn fn) {
  Tensor value = Tensor::from(std::move(shape), std::move(out));
  if (!tape) return value;
  return tape->record(std::move(value), std::move(inputs), std::move(fn));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_string(a.shape()) + " x " +
                                shape_string(b.shape()));
  }
  const std::size_t m = a.shape()[0], n = a.shape()[1], p = b.shape()[1];
  const auto A = a.values();
  const auto B = b.values();
  std::vector<double> c(m * p, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = A[i * n + k];
      for (std::size_t j = 0; j < p; ++j) c[i * p + j] += aik * B[k * p + j];
    }
  }
  Tape* tape = common_tape({&a, &b});
  return finish(tape, {m, p}, std::move(c), {a, b},
                [a, b, m, n, p](std::span<const double> g, std::span<const std::span<double>> in) {
                  const auto A = a.values();
                  const auto B = b.values();
                  if (!in[0].empty()) {
                    // dA = dC * B^T
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t k = 0; k < n; ++k) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < p; ++j) acc += g[i * p + j] * B[k * p + j];
                        in[0][i * n + k] += acc;
                      }
                  }
                  if (!in[1].empty()) {
                    // dB = A^T * dC
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t k = 0; k < n; ++k) {
                        const double aik = A[i * n + k];
                        for (std::size_t j = 0; j < p; ++j) in[1][k * p + j] += aik * g[i * p + j];
                      }
                  }
                });
}

Tensor conv3d(const Tensor& input, const Tensor& kernels, std::size_t stride) {
  if (input.rank() != 4 || kernels.rank() != 5) {
    throw std::invalid_argument("conv3d: expected input [C,D,H,W] and kernels [K,C,d,h,w], got " +
                                shape_string(input.shape()) + " and " + shape_string(kernels.shape()));
  }
  if (stride == 0) throw std::invalid_argument("conv3d: stride must be >= 1");
  const auto& is = input.shape();
  const auto& ks = kernels.shape();
  if (ks[1] != is[0]) {
    throw std::invalid_argument("conv3d: kernel channels " + std::to_string(ks[1]) +
                                " != input channels " + std::to_string(is[0]));
  }
  if (ks[2] > is[1] || ks[3] > is[2] || ks[4] > is[3]) {
    throw std::invalid_argument("conv3d: kernel " + shape_string(ks) + " larger than input " +
                                shape_string(is));
  }
  const std::size_t C = is[0], D = is[1], H = is[2], W = is[3];
  const std::size_t K = ks[0], kd = ks[2], kh = ks[3], kw = ks[4];
  const std::size_t OD = (D - kd) / stride + 1, OH = (H - kh) / stride + 1, OW = (W - kw) / stride + 1;

  const auto X = input.values();
  const auto F = kernels.values();
  std::vector<double> out(K * OD * OH * OW, 0.0);

  auto x_at = [=](std::size_t c, std::size_t d, std::size_t h, std::size_t w) {
    return ((c * D + d) * H + h) * W + w;
  };
  auto f_at = [=](std::size_t k, std::size_t c, std::size_t d, std::size_t h, std::size_t w) {
    return (((k * C + c) * kd + d) * kh + h) * kw + w;
  };
  auto o_at = [=](std::size_t k, std::size_t d, std::size_t h, std::size_t w) {
    return ((k * OD + d) * OH + h) * OW + w;
  };

  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t od = 0; od < OD; ++od)
      for (std::size_t oh = 0; oh < OH; ++oh)
        for (std::size_t ow = 0; ow < OW; ++ow) {
          double acc = 0.0;
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < kd; ++i)
              for (std::size_t j = 0; j < kh; ++j) {
                const double* xr = &X[x_at(c, od * stride + i, oh * stride + j, ow * stride)];
                const double* fr = &F[f_at(k, c, i, j, 0)];
                for (std::size_t l = 0; l < kw; ++l) acc += xr[l] * fr[l];
              }
          out[o_at(k, od, oh, ow)] = acc;
        }

  Tape* tape = common_tape({&input, &kernels});
  return finish(
      tape, {K, OD, OH, OW}, std::move(out), {input, kernels},
      [=](std::span<const double> g, std::span<const std::span<double>> in) {
        const auto X = input.values();
        const auto F = kernels.values();
        const bool want_x = !in[0].empty();
        const bool want_f = !in[1].empty();
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t od = 0; od < OD; ++od)
            for (std::size_t oh = 0; oh < OH; ++oh)
              for (std::size_t ow = 0; ow < OW; ++ow) {
                const double go = g[o_at(k, od, oh, ow)];
                if (go == 0.0) continue;
                for (std::size_t c = 0; c < C; ++c)
                  for (std::size_t i = 0; i < kd; ++i)
                    for (std::size_t j = 0; j < kh; ++j) {
                      const std::size_t xi = x_at(c, od * stride + i, oh * stride + j, ow * stride);
                      const std::size_t fi = f_at(k, c, i, j, 0);
                      if (want_x)
                        for (std::size_t l = 0; l < kw; ++l) in[0][xi + l] += go * F[fi + l];
                      if (want_f)
                        for (std::size_t l = 0; l < kw; ++l) in[1][fi + l] += go * X[xi + l];
                    }
              }
      });
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
  if (bias.rank() != 1 || x.shape()[0] != bias.shape()[0]) {
    throw std::invalid_argument("add_channel_bias: bias " + shape_string(bias.shape()) +
                                " does not match leading extent of " + shape_string(x.shape()));
  }
  const std::size_t channels = bias.size();
  const std::size_t per = x.size() / channels;
  std::vector<double> out = x.to_vector();
  const auto B = bias.values();
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < per; ++i) out[c * per + i] += B[c];
  Tape* tape = common_tape({&x, &bias});
  return finish(tape, x.shape(), std::move(out), {x, bias},
                [channels, per](std::span<const double> g, std::span<const std::span<double>> in) {
                  if (!in[0].empty())
                    for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i];
                  if (!in[1].empty())
                    for (std::size_t c = 0; c < channels; ++c) {
                      double acc = 0.0;
                      for (std::size_t i = 0; i < per; ++i) acc += g[c * per + i];
                      in[1][c] += acc;
                    }
                });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return finish(common_tape({&a, &b}), a.shape(), std::move(out), {a, b},
                [](std::span<const double> g, std::span<const std::span<double>> in) {
                  for (const auto& buf : in)
                    if (!buf.empty())
                      for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
                });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return finish(common_tape({&a, &b}), a.shape(), std::move(out), {a, b},
                [](std::span<const double> g, std::span<const std::span<double>> in) {
                  if (!in[0].empty())
                    for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i];
                  if (!in[1].empty())
                    for (std::size_t i = 0; i < g.size(); ++i) in[1][i] -= g[i];
                });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return finish(common_tape({&a, &b}), a.shape(), std::move(out), {a, b},
                [a, b](std::span<const double> g, std::span<const std::span<double>> in) {
                  if (!in[0].empty())
                    for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i] * b[i];
                  if (!in[1].empty())
                    for (std::size_t i = 0; i < g.size(); ++i) in[1][i] += g[i] * a[i];
                });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  return finish(common_tape({&a}), a.shape(), std::move(out), {a},
                [factor](std::span<const double> g, std::span<const std::span<double>> in) {
                  for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i] * factor;
                });
}

Tensor scale(const Tensor& a, const Tensor& s) {
  require_scalar(s, "scale");
  const double f = s[0];
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * f;
  return finish(common_tape({&a, &s}), a.shape(), std::move(out), {a, s},
                [a, f](std::span<const double> g, std::span<const std::span<double>> in) {
                  if (!in[0].empty())
                    for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i] * f;
                  if (!in[1].empty()) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * a[i];
                    in[1][0] += acc;
                  }
                });
}

Tensor divide(const Tensor& a, const Tensor& s) {
  require_scalar(s, "divide");
  const double d = s[0];
  if (d == 0.0) throw std::invalid_argument("divide: division by zero");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] / d;
  return finish(common_tape({&a, &s}), a.shape(), std::move(out), {a, s},
                [a, d](std::span<const double> g, std::span<const std::span<double>> in) {
                  if (!in[0].empty())
                    for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i] / d;
                  if (!in[1].empty()) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * a[i];
                    in[1][0] -= acc / (d * d);
                  }
                });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return finish(common_tape({&x}), x.shape(), std::move(out), {x},
                [x](std::span<const double> g, std::span<const std::span<double>> in) {
                  for (std::size_t i = 0; i < g.size(); ++i)
                    if (x[i] > 0.0) in[0][i] += g[i];
                });
}

Tensor reshape(const Tensor& x, Shape shape) {
  Tensor view = x.with_shape(std::move(shape));
  if (!x.tracked()) return view;
  return x.tape()->record(view, {x},
                          [](std::span<const double> g, std::span<const std::span<double>> in) {
                            for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i];
                          });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return finish(common_tape({&x}), {1}, {acc}, {x},
                [](std::span<const double> g, std::span<const std::span<double>> in) {
                  for (double& v : in[0]) v += g[0];
                });
}

Tensor mean(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  const double n = static_cast<double>(x.size());
  return finish(common_tape({&x}), {1}, {acc / n}, {x},
                [n](std::span<const double> g, std::span<const std::span<double>> in) {
                  for (double& v : in[0]) v += g[0] / n;
                });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot: length mismatch " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return finish(common_tape({&a, &b}), {1}, {acc}, {a, b},
                [a, b](std::span<const double> g, std::span<const std::span<double>> in) {
                  if (!in[0].empty())
                    for (std::size_t i = 0; i < in[0].size(); ++i) in[0][i] += g[0] * b[i];
                  if (!in[1].empty())
                    for (std::size_t i = 0; i < in[1].size(); ++i) in[1][i] += g[0] * a[i];
                });
}

Tensor l2_norm(const Tensor& x) {
  double ss = 0.0;
  for (double v : x.values()) ss += v * v;
  const double norm = std::sqrt(ss);
  return finish(common_tape({&x}), {1}, {norm}, {x},
                [x, norm](std::span<const double> g, std::span<const std::span<double>> in) {
                  if (norm == 0.0) return;
                  for (std::size_t i = 0; i < in[0].size(); ++i) in[0][i] += g[0] * x[i] / norm;
                });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::size_t label) {
  const std::size_t n = logits.size();
  if (label >= n) {
    throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(label) +
                                " out of range for " + std::to_string(n) + " classes");
  }
  const auto z = logits.values();
  const double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> p(n);
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(z[i] - zmax);
    denom += p[i];
  }
  for (double& v : p) v /= denom;
  const double loss = std::log(denom) - (z[label] - zmax);
  return finish(common_tape({&logits}), {1}, {loss}, {logits},
                [p = std::move(p), label](std::span<const double> g,
                                          std::span<const std::span<double>> in) {
                  for (std::size_t i = 0; i < p.size(); ++i)
                    in[0][i] += g[0] * (p[i] - (i == label ? 1.0 : 0.0));
                });
}

}  // namespace hsinoise
