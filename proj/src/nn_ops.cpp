#include "thermalcycle/nn_ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <string>

namespace thermalcycle {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

Var emit(const char* kind, Tensor value, const std::vector<const Var*>& operands, BackwardFn backward) {
  if (Tape* tape = shared_tape(operands)) return tape->record(kind, std::move(value), operands, std::move(backward));
  return Var::constant(std::move(value));
}

struct Geometry {
  int channels;
  int in_h, in_w;
  int out_h, out_w;
  int kernel, stride, padding;
};

// cols: (channels * k * k) x (out_h * out_w); zero outside the image.
void im2col(const float* image, const Geometry& g, float* cols) {
  const int k = g.kernel;
  const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    const float* src = image + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        float* row = cols + ((static_cast<std::size_t>(c) * k + ki) * k + kj) * out_plane;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.padding + ki;
          float* dst = row + static_cast<std::size_t>(oy) * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            for (int ox = 0; ox < g.out_w; ++ox) dst[ox] = 0.0f;
            continue;
          }
          const float* line = src + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.padding + kj;
            dst[ox] = (ix >= 0 && ix < g.in_w) ? line[ix] : 0.0f;
          }
        }
      }
    }
  }
}

// Scatter-add transpose of im2col.
void col2im(const float* cols, const Geometry& g, float* image) {
  const int k = g.kernel;
  const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    float* dst = image + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const float* row = cols + ((static_cast<std::size_t>(c) * k + ki) * k + kj) * out_plane;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.padding + ki;
          if (iy < 0 || iy >= g.in_h) continue;
          const float* src = row + static_cast<std::size_t>(oy) * g.out_w;
          float* line = dst + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.padding + kj;
            if (ix >= 0 && ix < g.in_w) line[ix] += src[ox];
          }
        }
      }
    }
  }
}

void check_bias(const Var& b, int channels, const char* op) {
  if (!(b.shape() == Shape{1, channels, 1, 1})) {
    throw ShapeError(std::string(op) + ": bias must be 1x" + std::to_string(channels) + "x1x1, got " +
                     b.shape().str());
  }
}

void add_bias(Tensor& out, const Tensor& bias) {
  const Shape& s = out.shape();
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      float* p = out.raw() + (static_cast<std::size_t>(n) * s.c + c) * plane;
      const float v = bias[c];
      for (std::size_t i = 0; i < plane; ++i) p[i] += v;
    }
  }
}

Tensor bias_grad(const Tensor& g) {
  const Shape& s = g.shape();
  const std::size_t plane = s.plane();
  Tensor out(Shape{1, s.c, 1, 1});
  for (int c = 0; c < s.c; ++c) {
    double acc = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const float* p = g.raw() + (static_cast<std::size_t>(n) * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
    }
    out[c] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace

int ConvSpec::output_size(int size) const {
  const int span = size + 2 * padding - kernel;
  if (span < 0) {
    throw ShapeError("conv2d: padded input " + std::to_string(size + 2 * padding) + " smaller than kernel " +
                     std::to_string(kernel));
  }
  return span / stride + 1;
}

int ConvTransposeSpec::output_size(int size) const {
  const int out = (size - 1) * stride - 2 * padding + kernel + output_padding;
  if (out < 1) throw ShapeError("conv_transpose2d: non-positive output size");
  return out;
}

Var conv2d(const Var& x_in, const Var& w, const Var& b, const ConvSpec& spec) {
  if (spec.kernel < 1 || spec.stride < 1 || spec.padding < 0) throw ShapeError("conv2d: invalid spec");
  const Shape xs = x_in.shape();
  if (xs.c != spec.in_channels) {
    throw ShapeError("conv2d: input has " + std::to_string(xs.c) + " channels, spec expects " +
                     std::to_string(spec.in_channels));
  }
  const Shape expected_w{spec.out_channels, spec.in_channels, spec.kernel, spec.kernel};
  if (!(w.shape() == expected_w)) {
    throw ShapeError("conv2d: weight shape " + w.shape().str() + ", expected " + expected_w.str());
  }
  check_bias(b, spec.out_channels, "conv2d");

  Var x = x_in;
  int pad = spec.padding;
  if (spec.pad_mode == PadMode::reflect && pad > 0) {
    x = reflection_pad(x_in, pad);
    pad = 0;
  }
  const Shape s = x.shape();
  ConvSpec zero_spec = spec;
  zero_spec.padding = pad;
  const Geometry g{s.c, s.h, s.w, zero_spec.output_size(s.h), zero_spec.output_size(s.w), spec.kernel, spec.stride,
                   pad};
  const int rows = s.c * spec.kernel * spec.kernel;
  const int cols = g.out_h * g.out_w;

  Tensor out(Shape{s.n, spec.out_channels, g.out_h, g.out_w});
  std::vector<float> col(static_cast<std::size_t>(rows) * cols);
  const ConstMatMap wm(w.value().raw(), spec.out_channels, rows);
  for (int n = 0; n < s.n; ++n) {
    im2col(x.value().raw() + static_cast<std::size_t>(n) * s.c * s.plane(), g, col.data());
    MatMap om(out.raw() + static_cast<std::size_t>(n) * spec.out_channels * cols, spec.out_channels, cols);
    om.noalias() = wm * ConstMatMap(col.data(), rows, cols);
  }
  add_bias(out, b.value());

  auto xv = x.shared_value();
  auto wv = w.shared_value();
  const int cout = spec.out_channels;
  return emit("conv2d", std::move(out), {&x, &w, &b}, [xv, wv, g, rows, cols, cout](const Tensor& grad, GradSink& sink) {
    const Shape s = xv->shape();
    const bool want_x = sink.wants(0);
    const bool want_w = sink.wants(1);
    std::vector<float> col(static_cast<std::size_t>(rows) * cols);
    Tensor gw(wv->shape());
    Tensor gx = want_x ? Tensor(s) : Tensor();
    MatMap gwm(gw.raw(), cout, rows);
    const ConstMatMap wm(wv->raw(), cout, rows);
    for (int n = 0; n < s.n; ++n) {
      const ConstMatMap gm(grad.raw() + static_cast<std::size_t>(n) * cout * cols, cout, cols);
      if (want_w) {
        im2col(xv->raw() + static_cast<std::size_t>(n) * s.c * s.plane(), g, col.data());
        gwm.noalias() += gm * ConstMatMap(col.data(), rows, cols).transpose();
      }
      if (want_x) {
        MatMap cm(col.data(), rows, cols);
        cm.noalias() = wm.transpose() * gm;
        col2im(col.data(), g, gx.raw() + static_cast<std::size_t>(n) * s.c * s.plane());
      }
    }
    if (want_x) sink.accumulate(0, std::move(gx));
    if (want_w) sink.accumulate(1, std::move(gw));
    if (sink.wants(2)) sink.accumulate(2, bias_grad(grad));
  });
}

Var conv_transpose2d(const Var& x, const Var& w, const Var& b, const ConvTransposeSpec& spec) {
  if (spec.kernel < 1 || spec.stride < 1 || spec.padding < 0 || spec.output_padding < 0) {
    throw ShapeError("conv_transpose2d: invalid spec");
  }
  if (spec.output_padding >= spec.stride) throw ShapeError("conv_transpose2d: output_padding must be < stride");
  const Shape s = x.shape();
  if (s.c != spec.in_channels) {
    throw ShapeError("conv_transpose2d: input has " + std::to_string(s.c) + " channels, spec expects " +
                     std::to_string(spec.in_channels));
  }
  const Shape expected_w{spec.in_channels, spec.out_channels, spec.kernel, spec.kernel};
  if (!(w.shape() == expected_w)) {
    throw ShapeError("conv_transpose2d: weight shape " + w.shape().str() + ", expected " + expected_w.str());
  }
  check_bias(b, spec.out_channels, "conv_transpose2d");

  const int out_h = spec.output_size(s.h);
  const int out_w = spec.output_size(s.w);
  // Geometry of the forward conv this op is the adjoint of: out image -> x.
  const Geometry g{spec.out_channels, out_h, out_w, s.h, s.w, spec.kernel, spec.stride, spec.padding};
  const int rows = spec.out_channels * spec.kernel * spec.kernel;
  const int cols = s.h * s.w;
  const int cin = spec.in_channels;

  Tensor out(Shape{s.n, spec.out_channels, out_h, out_w});
  std::vector<float> col(static_cast<std::size_t>(rows) * cols);
  const ConstMatMap wm(w.value().raw(), cin, rows);
  const std::size_t out_image = static_cast<std::size_t>(spec.out_channels) * out_h * out_w;
  for (int n = 0; n < s.n; ++n) {
    const ConstMatMap xm(x.value().raw() + static_cast<std::size_t>(n) * cin * cols, cin, cols);
    MatMap(col.data(), rows, cols).noalias() = wm.transpose() * xm;
    col2im(col.data(), g, out.raw() + n * out_image);
  }
  add_bias(out, b.value());

  auto xv = x.shared_value();
  auto wv = w.shared_value();
  return emit("conv_transpose2d", std::move(out), {&x, &w, &b},
              [xv, wv, g, rows, cols, cin, out_image](const Tensor& grad, GradSink& sink) {
                const Shape s = xv->shape();
                const bool want_x = sink.wants(0);
                const bool want_w = sink.wants(1);
                std::vector<float> col(static_cast<std::size_t>(rows) * cols);
                Tensor gw(wv->shape());
                Tensor gx = want_x ? Tensor(s) : Tensor();
                MatMap gwm(gw.raw(), cin, rows);
                const ConstMatMap wm(wv->raw(), cin, rows);
                for (int n = 0; n < s.n; ++n) {
                  im2col(grad.raw() + n * out_image, g, col.data());
                  const ConstMatMap cm(col.data(), rows, cols);
                  if (want_x) {
                    MatMap(gx.raw() + static_cast<std::size_t>(n) * cin * cols, cin, cols).noalias() = wm * cm;
                  }
                  if (want_w) {
                    const ConstMatMap xm(xv->raw() + static_cast<std::size_t>(n) * cin * cols, cin, cols);
                    gwm.noalias() += xm * cm.transpose();
                  }
                }
                if (want_x) sink.accumulate(0, std::move(gx));
                if (want_w) sink.accumulate(1, std::move(gw));
                if (sink.wants(2)) sink.accumulate(2, bias_grad(grad));
              });
}

Var instance_norm(const Var& x, const Var& gamma, const Var& beta, float eps) {
  if (!(eps > 0.0f)) throw std::invalid_argument("instance_norm: eps must be positive");
  const Shape s = x.shape();
  check_bias(gamma, s.c, "instance_norm gamma");
  check_bias(beta, s.c, "instance_norm beta");

  const std::size_t plane = s.plane();
  auto xhat = std::make_shared<Tensor>(s);
  auto inv_std = std::make_shared<std::vector<float>>(static_cast<std::size_t>(s.n) * s.c);
  Tensor out(s);
  const Tensor& xv = x.value();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * plane;
      double mean = 0.0;
      for (std::size_t i = 0; i < plane; ++i) mean += xv[base + i];
      mean /= static_cast<double>(plane);
      double var = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = xv[base + i] - mean;
        var += d * d;
      }
      var /= static_cast<double>(plane);
      const double is = 1.0 / std::sqrt(var + eps);
      (*inv_std)[static_cast<std::size_t>(n) * s.c + c] = static_cast<float>(is);
      const float gm = gamma.value()[c];
      const float bt = beta.value()[c];
      for (std::size_t i = 0; i < plane; ++i) {
        const float h = static_cast<float>((xv[base + i] - mean) * is);
        (*xhat)[base + i] = h;
        out[base + i] = gm * h + bt;
      }
    }
  }

  auto gv = gamma.shared_value();
  return emit("instance_norm", std::move(out), {&x, &gamma, &beta},
              [xhat, inv_std, gv](const Tensor& grad, GradSink& sink) {
                const Shape s = grad.shape();
                const std::size_t plane = s.plane();
                Tensor gx = sink.wants(0) ? Tensor(s) : Tensor();
                Tensor ggamma(Shape{1, s.c, 1, 1});
                Tensor gbeta(Shape{1, s.c, 1, 1});
                for (int n = 0; n < s.n; ++n) {
                  for (int c = 0; c < s.c; ++c) {
                    const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * plane;
                    double sum_g = 0.0;
                    double sum_gh = 0.0;
                    for (std::size_t i = 0; i < plane; ++i) {
                      sum_g += grad[base + i];
                      sum_gh += static_cast<double>(grad[base + i]) * (*xhat)[base + i];
                    }
                    ggamma[c] += static_cast<float>(sum_gh);
                    gbeta[c] += static_cast<float>(sum_g);
                    if (!sink.wants(0)) continue;
                    const double gm = (*gv)[c];
                    const double is = (*inv_std)[static_cast<std::size_t>(n) * s.c + c];
                    const double mean_g = sum_g / static_cast<double>(plane);
                    const double mean_gh = sum_gh / static_cast<double>(plane);
                    for (std::size_t i = 0; i < plane; ++i) {
                      const double d = grad[base + i] - mean_g - (*xhat)[base + i] * mean_gh;
                      gx[base + i] = static_cast<float>(gm * is * d);
                    }
                  }
                }
                if (sink.wants(0)) sink.accumulate(0, std::move(gx));
                if (sink.wants(1)) sink.accumulate(1, std::move(ggamma));
                if (sink.wants(2)) sink.accumulate(2, std::move(gbeta));
              });
}

Var activation(Activation kind, const Var& x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  const std::size_t n = out.numel();
  switch (kind.tag) {
    case Activation::Tag::relu: {
      for (std::size_t i = 0; i < n; ++i) out[i] = xv[i] > 0.0f ? xv[i] : 0.0f;
      return emit("relu", std::move(out), {&x}, [xs = x.shared_value()](const Tensor& g, GradSink& sink) {
        Tensor gx(g.shape());
        for (std::size_t i = 0; i < g.numel(); ++i) gx[i] = (*xs)[i] > 0.0f ? g[i] : 0.0f;
        sink.accumulate(0, std::move(gx));
      });
    }
    case Activation::Tag::leaky_relu: {
      const float slope = kind.slope;
      for (std::size_t i = 0; i < n; ++i) out[i] = xv[i] > 0.0f ? xv[i] : slope * xv[i];
      return emit("leaky_relu", std::move(out), {&x},
                  [xs = x.shared_value(), slope](const Tensor& g, GradSink& sink) {
                    Tensor gx(g.shape());
                    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] = (*xs)[i] > 0.0f ? g[i] : slope * g[i];
                    sink.accumulate(0, std::move(gx));
                  });
    }
    case Activation::Tag::tanh: {
      for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(xv[i]);
      auto ys = std::make_shared<const Tensor>(out);
      return emit("tanh", std::move(out), {&x}, [ys](const Tensor& g, GradSink& sink) {
        Tensor gx(g.shape());
        for (std::size_t i = 0; i < g.numel(); ++i) gx[i] = g[i] * (1.0f - (*ys)[i] * (*ys)[i]);
        sink.accumulate(0, std::move(gx));
      });
    }
  }
  throw std::logic_error("activation: unknown kind");
}

namespace {

// Source index along one axis for a reflected coordinate in [-p, size + p).
int reflect_index(int i, int size) {
  if (i < 0) return -i;
  if (i >= size) return 2 * (size - 1) - i;
  return i;
}

}  // namespace

Var reflection_pad(const Var& x, int p) {
  if (p < 0) throw ShapeError("reflection_pad: negative padding");
  const Shape s = x.shape();
  if (p >= s.h || p >= s.w) {
    throw ShapeError("reflection_pad: padding " + std::to_string(p) + " must be smaller than input " +
                     std::to_string(s.h) + "x" + std::to_string(s.w));
  }
  if (p == 0) return x;
  const Shape os{s.n, s.c, s.h + 2 * p, s.w + 2 * p};
  Tensor out(os);
  const Tensor& xv = x.value();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int oy = 0; oy < os.h; ++oy) {
        const int iy = reflect_index(oy - p, s.h);
        for (int ox = 0; ox < os.w; ++ox) {
          out.at(n, c, oy, ox) = xv.at(n, c, iy, reflect_index(ox - p, s.w));
        }
      }
    }
  }
  return emit("reflection_pad", std::move(out), {&x}, [s, os, p](const Tensor& g, GradSink& sink) {
    Tensor gx(s);
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        for (int oy = 0; oy < os.h; ++oy) {
          const int iy = reflect_index(oy - p, s.h);
          for (int ox = 0; ox < os.w; ++ox) {
            gx.at(n, c, iy, reflect_index(ox - p, s.w)) += g.at(n, c, oy, ox);
          }
        }
      }
    }
    sink.accumulate(0, std::move(gx));
  });
}

}  // namespace thermalcycle
