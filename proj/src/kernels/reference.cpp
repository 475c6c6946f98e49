/*
 * Copyright 2026 The TumorBench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Serial reference kernels. Direct loops in double precision; no attempt at
// speed. Every parallel kernel is tested against these.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tumorbench/kernels/kernels.hpp"

namespace tumorbench::kernels {

AxisPadding axis_padding(int in, int kernel, int stride, PaddingMode mode) {
  AxisPadding p;
  if (mode == PaddingMode::kValid) {
    p.out = (in - kernel) / stride + 1;
    p.pad_before = 0;
  } else {
    p.out = (in + stride - 1) / stride;
    const int total = std::max((p.out - 1) * stride + kernel - in, 0);
    p.pad_before = total / 2;
  }
  return p;
}

ConvGeometry make_conv_geometry(int batch, int in_h, int in_w, int in_c, int out_c, int kernel_h,
                                int kernel_w, int stride_h, int stride_w, PaddingMode mode) {
  const AxisPadding ph = axis_padding(in_h, kernel_h, stride_h, mode);
  const AxisPadding pw = axis_padding(in_w, kernel_w, stride_w, mode);
  ConvGeometry g;
  g.batch = batch;
  g.in_h = in_h;
  g.in_w = in_w;
  g.in_c = in_c;
  g.out_h = ph.out;
  g.out_w = pw.out;
  g.out_c = out_c;
  g.kernel_h = kernel_h;
  g.kernel_w = kernel_w;
  g.stride_h = stride_h;
  g.stride_w = stride_w;
  g.pad_top = ph.pad_before;
  g.pad_left = pw.pad_before;
  return g;
}

ConvGeometry make_pool_geometry(int batch, int in_h, int in_w, int channels, int pool_h,
                                int pool_w, int stride_h, int stride_w, PaddingMode mode) {
  return make_conv_geometry(batch, in_h, in_w, channels, channels, pool_h, pool_w, stride_h,
                            stride_w, mode);
}

namespace reference {

namespace {

inline long nhwc(const ConvGeometry& g, int n, int y, int x, int c, bool output) {
  if (output) return ((static_cast<long>(n) * g.out_h + y) * g.out_w + x) * g.out_c + c;
  return ((static_cast<long>(n) * g.in_h + y) * g.in_w + x) * g.in_c + c;
}

inline long hwio(const ConvGeometry& g, int ky, int kx, int ci, int co) {
  return ((static_cast<long>(ky) * g.kernel_w + kx) * g.in_c + ci) * g.out_c + co;
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const float> input,
                    std::span<const float> kernel, std::span<float> output) {
  for (int n = 0; n < g.batch; ++n)
    for (int oy = 0; oy < g.out_h; ++oy)
      for (int ox = 0; ox < g.out_w; ++ox)
        for (int co = 0; co < g.out_c; ++co) {
          double acc = 0.0;
          for (int ky = 0; ky < g.kernel_h; ++ky) {
            const int iy = oy * g.stride_h - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int ix = ox * g.stride_w - g.pad_left + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              for (int ci = 0; ci < g.in_c; ++ci)
                acc += static_cast<double>(input[nhwc(g, n, iy, ix, ci, false)]) *
                       kernel[hwio(g, ky, kx, ci, co)];
            }
          }
          output[nhwc(g, n, oy, ox, co, true)] = static_cast<float>(acc);
        }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                           std::span<const float> kernel, std::span<float> grad_input) {
  std::vector<double> acc(static_cast<std::size_t>(g.input_size()), 0.0);
  for (int n = 0; n < g.batch; ++n)
    for (int oy = 0; oy < g.out_h; ++oy)
      for (int ox = 0; ox < g.out_w; ++ox)
        for (int co = 0; co < g.out_c; ++co) {
          const double dy = grad_output[nhwc(g, n, oy, ox, co, true)];
          for (int ky = 0; ky < g.kernel_h; ++ky) {
            const int iy = oy * g.stride_h - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int ix = ox * g.stride_w - g.pad_left + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              for (int ci = 0; ci < g.in_c; ++ci)
                acc[nhwc(g, n, iy, ix, ci, false)] += dy * kernel[hwio(g, ky, kx, ci, co)];
            }
          }
        }
  std::transform(acc.begin(), acc.end(), grad_input.begin(),
                 [](double v) { return static_cast<float>(v); });
}

void conv2d_backward_kernel(const ConvGeometry& g, std::span<const float> input,
                            std::span<const float> grad_output, std::span<float> grad_kernel) {
  std::vector<double> acc(static_cast<std::size_t>(g.kernel_size()), 0.0);
  for (int n = 0; n < g.batch; ++n)
    for (int oy = 0; oy < g.out_h; ++oy)
      for (int ox = 0; ox < g.out_w; ++ox)
        for (int co = 0; co < g.out_c; ++co) {
          const double dy = grad_output[nhwc(g, n, oy, ox, co, true)];
          for (int ky = 0; ky < g.kernel_h; ++ky) {
            const int iy = oy * g.stride_h - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int ix = ox * g.stride_w - g.pad_left + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              for (int ci = 0; ci < g.in_c; ++ci)
                acc[hwio(g, ky, kx, ci, co)] += dy * input[nhwc(g, n, iy, ix, ci, false)];
            }
          }
        }
  for (std::size_t i = 0; i < acc.size(); ++i) grad_kernel[i] += static_cast<float>(acc[i]);
}

void depthwise_conv2d_forward(const ConvGeometry& g, std::span<const float> input,
                              std::span<const float> kernel, std::span<float> output) {
  for (int n = 0; n < g.batch; ++n)
    for (int oy = 0; oy < g.out_h; ++oy)
      for (int ox = 0; ox < g.out_w; ++ox)
        for (int c = 0; c < g.in_c; ++c) {
          double acc = 0.0;
          for (int ky = 0; ky < g.kernel_h; ++ky) {
            const int iy = oy * g.stride_h - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int ix = ox * g.stride_w - g.pad_left + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              acc += static_cast<double>(input[nhwc(g, n, iy, ix, c, false)]) *
                     kernel[(static_cast<long>(ky) * g.kernel_w + kx) * g.in_c + c];
            }
          }
          output[nhwc(g, n, oy, ox, c, true)] = static_cast<float>(acc);
        }
}

void depthwise_conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                                     std::span<const float> kernel, std::span<float> grad_input) {
  std::vector<double> acc(static_cast<std::size_t>(g.input_size()), 0.0);
  for (int n = 0; n < g.batch; ++n)
    for (int oy = 0; oy < g.out_h; ++oy)
      for (int ox = 0; ox < g.out_w; ++ox)
        for (int c = 0; c < g.in_c; ++c) {
          const double dy = grad_output[nhwc(g, n, oy, ox, c, true)];
          for (int ky = 0; ky < g.kernel_h; ++ky) {
            const int iy = oy * g.stride_h - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int ix = ox * g.stride_w - g.pad_left + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              acc[nhwc(g, n, iy, ix, c, false)] +=
                  dy * kernel[(static_cast<long>(ky) * g.kernel_w + kx) * g.in_c + c];
            }
          }
        }
  std::transform(acc.begin(), acc.end(), grad_input.begin(),
                 [](double v) { return static_cast<float>(v); });
}

void depthwise_conv2d_backward_kernel(const ConvGeometry& g, std::span<const float> input,
                                      std::span<const float> grad_output,
                                      std::span<float> grad_kernel) {
  std::vector<double> acc(static_cast<std::size_t>(g.kernel_h) * g.kernel_w * g.in_c, 0.0);
  for (int n = 0; n < g.batch; ++n)
    for (int oy = 0; oy < g.out_h; ++oy)
      for (int ox = 0; ox < g.out_w; ++ox)
        for (int c = 0; c < g.in_c; ++c) {
          const double dy = grad_output[nhwc(g, n, oy, ox, c, true)];
          for (int ky = 0; ky < g.kernel_h; ++ky) {
            const int iy = oy * g.stride_h - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int ix = ox * g.stride_w - g.pad_left + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              acc[(static_cast<long>(ky) * g.kernel_w + kx) * g.in_c + c] +=
                  dy * input[nhwc(g, n, iy, ix, c, false)];
            }
          }
        }
  for (std::size_t i = 0; i < acc.size(); ++i) grad_kernel[i] += static_cast<float>(acc[i]);
}

void max_pool_forward(const ConvGeometry& g, std::span<const float> input,
                      std::span<float> output) {
  for (int n = 0; n < g.batch; ++n)
    for (int oy = 0; oy < g.out_h; ++oy)
      for (int ox = 0; ox < g.out_w; ++ox)
        for (int c = 0; c < g.in_c; ++c) {
          float best = -std::numeric_limits<float>::infinity();
          for (int ky = 0; ky < g.kernel_h; ++ky) {
            const int iy = oy * g.stride_h - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int ix = ox * g.stride_w - g.pad_left + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              best = std::max(best, input[nhwc(g, n, iy, ix, c, false)]);
            }
          }
          output[nhwc(g, n, oy, ox, c, true)] = best;
        }
}

void max_pool_backward(const ConvGeometry& g, std::span<const float> input,
                       std::span<const float> grad_output, std::span<float> grad_input) {
  std::fill(grad_input.begin(), grad_input.end(), 0.0f);
  for (int n = 0; n < g.batch; ++n)
    for (int oy = 0; oy < g.out_h; ++oy)
      for (int ox = 0; ox < g.out_w; ++ox)
        for (int c = 0; c < g.in_c; ++c) {
          float best = -std::numeric_limits<float>::infinity();
          long arg = -1;
          for (int ky = 0; ky < g.kernel_h; ++ky) {
            const int iy = oy * g.stride_h - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int ix = ox * g.stride_w - g.pad_left + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              const long idx = nhwc(g, n, iy, ix, c, false);
              if (arg < 0 || input[idx] > best) {
                best = input[idx];
                arg = idx;
              }
            }
          }
          if (arg >= 0) grad_input[arg] += grad_output[nhwc(g, n, oy, ox, c, true)];
        }
}

void avg_pool_forward(const ConvGeometry& g, std::span<const float> input,
                      std::span<float> output) {
  for (int n = 0; n < g.batch; ++n)
    for (int oy = 0; oy < g.out_h; ++oy)
      for (int ox = 0; ox < g.out_w; ++ox)
        for (int c = 0; c < g.in_c; ++c) {
          double acc = 0.0;
          int count = 0;
          for (int ky = 0; ky < g.kernel_h; ++ky) {
            const int iy = oy * g.stride_h - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int ix = ox * g.stride_w - g.pad_left + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              acc += input[nhwc(g, n, iy, ix, c, false)];
              ++count;
            }
          }
          output[nhwc(g, n, oy, ox, c, true)] = count ? static_cast<float>(acc / count) : 0.0f;
        }
}

void avg_pool_backward(const ConvGeometry& g, std::span<const float> grad_output,
                       std::span<float> grad_input) {
  std::fill(grad_input.begin(), grad_input.end(), 0.0f);
  for (int n = 0; n < g.batch; ++n)
    for (int oy = 0; oy < g.out_h; ++oy)
      for (int ox = 0; ox < g.out_w; ++ox)
        for (int c = 0; c < g.in_c; ++c) {
          int count = 0;
          for (int ky = 0; ky < g.kernel_h; ++ky) {
            const int iy = oy * g.stride_h - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int ix = ox * g.stride_w - g.pad_left + kx;
              if (ix >= 0 && ix < g.in_w) ++count;
            }
          }
          if (count == 0) continue;
          const float share = grad_output[nhwc(g, n, oy, ox, c, true)] / count;
          for (int ky = 0; ky < g.kernel_h; ++ky) {
            const int iy = oy * g.stride_h - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int ix = ox * g.stride_w - g.pad_left + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              grad_input[nhwc(g, n, iy, ix, c, false)] += share;
            }
          }
        }
}

void batch_norm_training_forward(long rows, int channels, std::span<const float> x,
                                 std::span<const float> gamma, std::span<const float> beta,
                                 float epsilon, std::span<float> y, std::span<float> batch_mean,
                                 std::span<float> batch_var) {
  for (int c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (long r = 0; r < rows; ++r) sum += x[r * channels + c];
    const double mean = sum / static_cast<double>(rows);
    double sq = 0.0;
    for (long r = 0; r < rows; ++r) {
      const double d = x[r * channels + c] - mean;
      sq += d * d;
    }
    const double var = sq / static_cast<double>(rows);
    const double inv = 1.0 / std::sqrt(var + epsilon);
    const double scale = gamma.empty() ? 1.0 : gamma[c];
    for (long r = 0; r < rows; ++r)
      y[r * channels + c] = static_cast<float>((x[r * channels + c] - mean) * inv * scale + beta[c]);
    batch_mean[c] = static_cast<float>(mean);
    batch_var[c] = static_cast<float>(var);
  }
}

void batch_norm_inference_forward(long rows, int channels, std::span<const float> x,
                                  std::span<const float> gamma, std::span<const float> beta,
                                  std::span<const float> mean, std::span<const float> var,
                                  float epsilon, std::span<float> y) {
  for (long r = 0; r < rows; ++r)
    for (int c = 0; c < channels; ++c) {
      const double scale = gamma.empty() ? 1.0 : gamma[c];
      const double inv = 1.0 / std::sqrt(static_cast<double>(var[c]) + epsilon);
      y[r * channels + c] =
          static_cast<float>((x[r * channels + c] - mean[c]) * inv * scale + beta[c]);
    }
}

void batch_norm_backward(long rows, int channels, std::span<const float> x,
                         std::span<const float> grad_y, std::span<const float> gamma,
                         std::span<const float> batch_mean, std::span<const float> batch_var,
                         float epsilon, std::span<float> grad_x, std::span<float> grad_gamma,
                         std::span<float> grad_beta) {
  for (int c = 0; c < channels; ++c) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(batch_var[c]) + epsilon);
    const double scale = gamma.empty() ? 1.0 : gamma[c];
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (long r = 0; r < rows; ++r) {
      const double xhat = (x[r * channels + c] - batch_mean[c]) * inv;
      sum_dy += grad_y[r * channels + c];
      sum_dy_xhat += grad_y[r * channels + c] * xhat;
    }
    if (!grad_gamma.empty()) grad_gamma[c] += static_cast<float>(sum_dy_xhat);
    grad_beta[c] += static_cast<float>(sum_dy);
    const double m = static_cast<double>(rows);
    for (long r = 0; r < rows; ++r) {
      const double xhat = (x[r * channels + c] - batch_mean[c]) * inv;
      grad_x[r * channels + c] = static_cast<float>(
          scale * inv * (grad_y[r * channels + c] - sum_dy / m - xhat * sum_dy_xhat / m));
    }
  }
}

void global_avg_pool_forward(int batch, long spatial, int channels, std::span<const float> input,
                             std::span<float> output) {
  for (int n = 0; n < batch; ++n)
    for (int c = 0; c < channels; ++c) {
      double acc = 0.0;
      for (long s = 0; s < spatial; ++s) acc += input[(n * spatial + s) * channels + c];
      output[static_cast<long>(n) * channels + c] = static_cast<float>(acc / spatial);
    }
}

void global_avg_pool_backward(int batch, long spatial, int channels,
                              std::span<const float> grad_output, std::span<float> grad_input) {
  for (int n = 0; n < batch; ++n)
    for (long s = 0; s < spatial; ++s)
      for (int c = 0; c < channels; ++c)
        grad_input[(n * spatial + s) * channels + c] =
            grad_output[static_cast<long>(n) * channels + c] / static_cast<float>(spatial);
}

void dense_forward(int rows, int in, int out, std::span<const float> x, std::span<const float> w,
                   std::span<const float> b, std::span<float> y) {
  for (int r = 0; r < rows; ++r)
    for (int o = 0; o < out; ++o) {
      double acc = b.empty() ? 0.0 : b[o];
      for (int i = 0; i < in; ++i)
        acc += static_cast<double>(x[static_cast<long>(r) * in + i]) * w[static_cast<long>(i) * out + o];
      y[static_cast<long>(r) * out + o] = static_cast<float>(acc);
    }
}

void dense_backward(int rows, int in, int out, std::span<const float> x, std::span<const float> w,
                    std::span<const float> grad_y, std::span<float> grad_x,
                    std::span<float> grad_w, std::span<float> grad_b) {
  for (int r = 0; r < rows; ++r)
    for (int i = 0; i < in; ++i) {
      double acc = 0.0;
      for (int o = 0; o < out; ++o)
        acc += static_cast<double>(grad_y[static_cast<long>(r) * out + o]) *
               w[static_cast<long>(i) * out + o];
      if (!grad_x.empty()) grad_x[static_cast<long>(r) * in + i] = static_cast<float>(acc);
    }
  for (int i = 0; i < in; ++i)
    for (int o = 0; o < out; ++o) {
      double acc = 0.0;
      for (int r = 0; r < rows; ++r)
        acc += static_cast<double>(x[static_cast<long>(r) * in + i]) *
               grad_y[static_cast<long>(r) * out + o];
      grad_w[static_cast<long>(i) * out + o] += static_cast<float>(acc);
    }
  if (!grad_b.empty())
    for (int o = 0; o < out; ++o) {
      double acc = 0.0;
      for (int r = 0; r < rows; ++r) acc += grad_y[static_cast<long>(r) * out + o];
      grad_b[o] += static_cast<float>(acc);
    }
}

void relu_forward(std::span<const float> x, std::span<float> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] < 0.0f ? 0.0f : x[i];
}

void relu_backward(std::span<const float> y, std::span<const float> grad_y,
                   std::span<float> grad_x) {
  for (std::size_t i = 0; i < y.size(); ++i) grad_x[i] = y[i] > 0.0f ? grad_y[i] : 0.0f;
}

}  // namespace reference
}  // namespace tumorbench::kernels
