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

#include <cblas.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "tumorbench/kernels/kernels.hpp"

namespace tumorbench::kernels::parallel {

namespace {

// Scratch for im2col columns; grows monotonically per thread.
std::vector<float>& scratch(std::size_t n) {
  thread_local std::vector<float> buffer;
  if (buffer.size() < n) buffer.resize(n);
  return buffer;
}

bool is_pointwise(const ConvGeometry& g) {
  return g.kernel_h == 1 && g.kernel_w == 1 && g.stride_h == 1 && g.stride_w == 1 &&
         g.pad_top == 0 && g.pad_left == 0;
}

// cols[(oy*out_w+ox)][(ky*kw+kx)*in_c + c] for one image.
void im2col(const ConvGeometry& g, const float* image, float* cols) {
  const long row_len = static_cast<long>(g.kernel_h) * g.kernel_w * g.in_c;
#pragma omp parallel for schedule(static)
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      float* dst = cols + (static_cast<long>(oy) * g.out_w + ox) * row_len;
      for (int ky = 0; ky < g.kernel_h; ++ky) {
        const int iy = oy * g.stride_h - g.pad_top + ky;
        for (int kx = 0; kx < g.kernel_w; ++kx) {
          const int ix = ox * g.stride_w - g.pad_left + kx;
          float* cell = dst + (static_cast<long>(ky) * g.kernel_w + kx) * g.in_c;
          if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) {
            std::memset(cell, 0, sizeof(float) * g.in_c);
          } else {
            std::memcpy(cell, image + (static_cast<long>(iy) * g.in_w + ix) * g.in_c,
                        sizeof(float) * g.in_c);
          }
        }
      }
    }
  }
}

// Scatter-add of column gradients back onto one image. Parallel over input
// rows: each row gathers every (oy, ky) tap that lands on it.
void col2im(const ConvGeometry& g, const float* cols, float* image) {
  const long row_len = static_cast<long>(g.kernel_h) * g.kernel_w * g.in_c;
#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < g.in_h; ++iy) {
    float* dst_row = image + static_cast<long>(iy) * g.in_w * g.in_c;
    std::fill(dst_row, dst_row + static_cast<long>(g.in_w) * g.in_c, 0.0f);
    for (int ky = 0; ky < g.kernel_h; ++ky) {
      const int num = iy + g.pad_top - ky;
      if (num < 0 || num % g.stride_h != 0) continue;
      const int oy = num / g.stride_h;
      if (oy >= g.out_h) continue;
      for (int ox = 0; ox < g.out_w; ++ox) {
        const float* src = cols + (static_cast<long>(oy) * g.out_w + ox) * row_len +
                           static_cast<long>(ky) * g.kernel_w * g.in_c;
        for (int kx = 0; kx < g.kernel_w; ++kx) {
          const int ix = ox * g.stride_w - g.pad_left + kx;
          if (ix < 0 || ix >= g.in_w) continue;
          float* dst = dst_row + static_cast<long>(ix) * g.in_c;
          const float* s = src + static_cast<long>(kx) * g.in_c;
#pragma omp simd
          for (int c = 0; c < g.in_c; ++c) dst[c] += s[c];
        }
      }
    }
  }
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const float> input,
                    std::span<const float> kernel, std::span<float> output) {
  const int m = g.out_h * g.out_w;
  const int k = g.kernel_h * g.kernel_w * g.in_c;
  const long in_stride = static_cast<long>(g.in_h) * g.in_w * g.in_c;
  const long out_stride = static_cast<long>(m) * g.out_c;
  if (is_pointwise(g)) {
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, g.batch * m, g.out_c, k, 1.0f,
                input.data(), k, kernel.data(), g.out_c, 0.0f, output.data(), g.out_c);
    return;
  }
  float* cols = scratch(static_cast<std::size_t>(m) * k).data();
  for (int n = 0; n < g.batch; ++n) {
    im2col(g, input.data() + n * in_stride, cols);
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, g.out_c, k, 1.0f, cols, k,
                kernel.data(), g.out_c, 0.0f, output.data() + n * out_stride, g.out_c);
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                           std::span<const float> kernel, std::span<float> grad_input) {
  const int m = g.out_h * g.out_w;
  const int k = g.kernel_h * g.kernel_w * g.in_c;
  const long in_stride = static_cast<long>(g.in_h) * g.in_w * g.in_c;
  const long out_stride = static_cast<long>(m) * g.out_c;
  if (is_pointwise(g)) {
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, g.batch * m, k, g.out_c, 1.0f,
                grad_output.data(), g.out_c, kernel.data(), g.out_c, 0.0f, grad_input.data(), k);
    return;
  }
  float* cols = scratch(static_cast<std::size_t>(m) * k).data();
  for (int n = 0; n < g.batch; ++n) {
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, k, g.out_c, 1.0f,
                grad_output.data() + n * out_stride, g.out_c, kernel.data(), g.out_c, 0.0f, cols,
                k);
    col2im(g, cols, grad_input.data() + n * in_stride);
  }
}

void conv2d_backward_kernel(const ConvGeometry& g, std::span<const float> input,
                            std::span<const float> grad_output, std::span<float> grad_kernel) {
  const int m = g.out_h * g.out_w;
  const int k = g.kernel_h * g.kernel_w * g.in_c;
  const long in_stride = static_cast<long>(g.in_h) * g.in_w * g.in_c;
  const long out_stride = static_cast<long>(m) * g.out_c;
  if (is_pointwise(g)) {
    cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, g.out_c, g.batch * m, 1.0f,
                input.data(), k, grad_output.data(), g.out_c, 1.0f, grad_kernel.data(), g.out_c);
    return;
  }
  float* cols = scratch(static_cast<std::size_t>(m) * k).data();
  for (int n = 0; n < g.batch; ++n) {
    im2col(g, input.data() + n * in_stride, cols);
    cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, g.out_c, m, 1.0f, cols, k,
                grad_output.data() + n * out_stride, g.out_c, 1.0f, grad_kernel.data(), g.out_c);
  }
}

void depthwise_conv2d_forward(const ConvGeometry& g, std::span<const float> input,
                              std::span<const float> kernel, std::span<float> output) {
  const int c_count = g.in_c;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        float* out = output.data() + ((static_cast<long>(n) * g.out_h + oy) * g.out_w + ox) * c_count;
        std::fill(out, out + c_count, 0.0f);
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          const int iy = oy * g.stride_h - g.pad_top + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const int ix = ox * g.stride_w - g.pad_left + kx;
            if (ix < 0 || ix >= g.in_w) continue;
            const float* in =
                input.data() + ((static_cast<long>(n) * g.in_h + iy) * g.in_w + ix) * c_count;
            const float* w = kernel.data() + (static_cast<long>(ky) * g.kernel_w + kx) * c_count;
#pragma omp simd
            for (int c = 0; c < c_count; ++c) out[c] += in[c] * w[c];
          }
        }
      }
    }
  }
}

void depthwise_conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                                     std::span<const float> kernel, std::span<float> grad_input) {
  const int c_count = g.in_c;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    for (int iy = 0; iy < g.in_h; ++iy) {
      float* row = grad_input.data() + (static_cast<long>(n) * g.in_h + iy) * g.in_w * c_count;
      std::fill(row, row + static_cast<long>(g.in_w) * c_count, 0.0f);
      for (int ky = 0; ky < g.kernel_h; ++ky) {
        const int num = iy + g.pad_top - ky;
        if (num < 0 || num % g.stride_h != 0) continue;
        const int oy = num / g.stride_h;
        if (oy >= g.out_h) continue;
        for (int ox = 0; ox < g.out_w; ++ox) {
          const float* dy =
              grad_output.data() + ((static_cast<long>(n) * g.out_h + oy) * g.out_w + ox) * c_count;
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const int ix = ox * g.stride_w - g.pad_left + kx;
            if (ix < 0 || ix >= g.in_w) continue;
            const float* w = kernel.data() + (static_cast<long>(ky) * g.kernel_w + kx) * c_count;
            float* dst = row + static_cast<long>(ix) * c_count;
#pragma omp simd
            for (int c = 0; c < c_count; ++c) dst[c] += dy[c] * w[c];
          }
        }
      }
    }
  }
}

void depthwise_conv2d_backward_kernel(const ConvGeometry& g, std::span<const float> input,
                                      std::span<const float> grad_output,
                                      std::span<float> grad_kernel) {
  const int c_count = g.in_c;
  const long taps = static_cast<long>(g.kernel_h) * g.kernel_w * c_count;
#pragma omp parallel
  {
    std::vector<float> local(static_cast<std::size_t>(taps), 0.0f);
#pragma omp for collapse(2) schedule(static)
    for (int n = 0; n < g.batch; ++n) {
      for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
          const float* dy =
              grad_output.data() + ((static_cast<long>(n) * g.out_h + oy) * g.out_w + ox) * c_count;
          for (int ky = 0; ky < g.kernel_h; ++ky) {
            const int iy = oy * g.stride_h - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int ix = ox * g.stride_w - g.pad_left + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              const float* in =
                  input.data() + ((static_cast<long>(n) * g.in_h + iy) * g.in_w + ix) * c_count;
              float* acc = local.data() + (static_cast<long>(ky) * g.kernel_w + kx) * c_count;
#pragma omp simd
              for (int c = 0; c < c_count; ++c) acc[c] += in[c] * dy[c];
            }
          }
        }
      }
    }
#pragma omp critical
    for (long i = 0; i < taps; ++i) grad_kernel[i] += local[i];
  }
}

void max_pool_forward(const ConvGeometry& g, std::span<const float> input,
                      std::span<float> output) {
  const int c_count = g.in_c;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        float* out = output.data() + ((static_cast<long>(n) * g.out_h + oy) * g.out_w + ox) * c_count;
        std::fill(out, out + c_count, -std::numeric_limits<float>::infinity());
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          const int iy = oy * g.stride_h - g.pad_top + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const int ix = ox * g.stride_w - g.pad_left + kx;
            if (ix < 0 || ix >= g.in_w) continue;
            const float* in =
                input.data() + ((static_cast<long>(n) * g.in_h + iy) * g.in_w + ix) * c_count;
#pragma omp simd
            for (int c = 0; c < c_count; ++c) out[c] = std::max(out[c], in[c]);
          }
        }
      }
    }
  }
}

void max_pool_backward(const ConvGeometry& g, std::span<const float> input,
                       std::span<const float> grad_output, std::span<float> grad_input) {
  const int c_count = g.in_c;
  std::fill(grad_input.begin(), grad_input.end(), 0.0f);
  // Windows overlap only within an image, so images are independent.
#pragma omp parallel for schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    std::vector<long> arg(static_cast<std::size_t>(c_count));
    std::vector<float> best(static_cast<std::size_t>(c_count));
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        std::fill(arg.begin(), arg.end(), -1L);
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          const int iy = oy * g.stride_h - g.pad_top + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const int ix = ox * g.stride_w - g.pad_left + kx;
            if (ix < 0 || ix >= g.in_w) continue;
            const long base = ((static_cast<long>(n) * g.in_h + iy) * g.in_w + ix) * c_count;
            for (int c = 0; c < c_count; ++c) {
              if (arg[c] < 0 || input[base + c] > best[c]) {
                best[c] = input[base + c];
                arg[c] = base + c;
              }
            }
          }
        }
        const float* dy =
            grad_output.data() + ((static_cast<long>(n) * g.out_h + oy) * g.out_w + ox) * c_count;
        for (int c = 0; c < c_count; ++c)
          if (arg[c] >= 0) grad_input[arg[c]] += dy[c];
      }
    }
  }
}

void avg_pool_forward(const ConvGeometry& g, std::span<const float> input,
                      std::span<float> output) {
  const int c_count = g.in_c;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        float* out = output.data() + ((static_cast<long>(n) * g.out_h + oy) * g.out_w + ox) * c_count;
        std::fill(out, out + c_count, 0.0f);
        int count = 0;
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          const int iy = oy * g.stride_h - g.pad_top + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const int ix = ox * g.stride_w - g.pad_left + kx;
            if (ix < 0 || ix >= g.in_w) continue;
            const float* in =
                input.data() + ((static_cast<long>(n) * g.in_h + iy) * g.in_w + ix) * c_count;
#pragma omp simd
            for (int c = 0; c < c_count; ++c) out[c] += in[c];
            ++count;
          }
        }
        const float scale = count ? 1.0f / static_cast<float>(count) : 0.0f;
        for (int c = 0; c < c_count; ++c) out[c] *= scale;
      }
    }
  }
}

void avg_pool_backward(const ConvGeometry& g, std::span<const float> grad_output,
                       std::span<float> grad_input) {
  const int c_count = g.in_c;
  std::fill(grad_input.begin(), grad_input.end(), 0.0f);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
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
        const float scale = 1.0f / static_cast<float>(count);
        const float* dy =
            grad_output.data() + ((static_cast<long>(n) * g.out_h + oy) * g.out_w + ox) * c_count;
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          const int iy = oy * g.stride_h - g.pad_top + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const int ix = ox * g.stride_w - g.pad_left + kx;
            if (ix < 0 || ix >= g.in_w) continue;
            float* dst =
                grad_input.data() + ((static_cast<long>(n) * g.in_h + iy) * g.in_w + ix) * c_count;
#pragma omp simd
            for (int c = 0; c < c_count; ++c) dst[c] += dy[c] * scale;
          }
        }
      }
    }
  }
}

namespace {

// Per-channel sums of f(x) over rows, accumulated in double.
template <typename F>
void channel_sums(long rows, int channels, F&& term, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(channels), 0.0);
#pragma omp parallel
  {
    std::vector<double> local(static_cast<std::size_t>(channels), 0.0);
#pragma omp for schedule(static)
    for (long r = 0; r < rows; ++r)
      for (int c = 0; c < channels; ++c) local[c] += term(r, c);
#pragma omp critical
    for (int c = 0; c < channels; ++c) out[c] += local[c];
  }
}

}  // namespace

void batch_norm_training_forward(long rows, int channels, std::span<const float> x,
                                 std::span<const float> gamma, std::span<const float> beta,
                                 float epsilon, std::span<float> y, std::span<float> batch_mean,
                                 std::span<float> batch_var) {
  std::vector<double> sums;
  channel_sums(rows, channels, [&](long r, int c) { return static_cast<double>(x[r * channels + c]); },
               sums);
  std::vector<double> mean(sums.size());
  for (int c = 0; c < channels; ++c) mean[c] = sums[c] / static_cast<double>(rows);
  channel_sums(
      rows, channels,
      [&](long r, int c) {
        const double d = x[r * channels + c] - mean[c];
        return d * d;
      },
      sums);
  std::vector<float> scale(static_cast<std::size_t>(channels)), shift(static_cast<std::size_t>(channels));
  for (int c = 0; c < channels; ++c) {
    const double var = sums[c] / static_cast<double>(rows);
    const double inv = 1.0 / std::sqrt(var + epsilon);
    const double s = inv * (gamma.empty() ? 1.0 : gamma[c]);
    scale[c] = static_cast<float>(s);
    shift[c] = static_cast<float>(beta[c] - mean[c] * s);
    batch_mean[c] = static_cast<float>(mean[c]);
    batch_var[c] = static_cast<float>(var);
  }
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
    const float* xr = x.data() + r * channels;
    float* yr = y.data() + r * channels;
#pragma omp simd
    for (int c = 0; c < channels; ++c) yr[c] = xr[c] * scale[c] + shift[c];
  }
}

void batch_norm_inference_forward(long rows, int channels, std::span<const float> x,
                                  std::span<const float> gamma, std::span<const float> beta,
                                  std::span<const float> mean, std::span<const float> var,
                                  float epsilon, std::span<float> y) {
  std::vector<float> scale(static_cast<std::size_t>(channels)), shift(static_cast<std::size_t>(channels));
  for (int c = 0; c < channels; ++c) {
    const double s = (gamma.empty() ? 1.0 : gamma[c]) / std::sqrt(static_cast<double>(var[c]) + epsilon);
    scale[c] = static_cast<float>(s);
    shift[c] = static_cast<float>(beta[c] - mean[c] * s);
  }
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
    const float* xr = x.data() + r * channels;
    float* yr = y.data() + r * channels;
#pragma omp simd
    for (int c = 0; c < channels; ++c) yr[c] = xr[c] * scale[c] + shift[c];
  }
}

void batch_norm_backward(long rows, int channels, std::span<const float> x,
                         std::span<const float> grad_y, std::span<const float> gamma,
                         std::span<const float> batch_mean, std::span<const float> batch_var,
                         float epsilon, std::span<float> grad_x, std::span<float> grad_gamma,
                         std::span<float> grad_beta) {
  std::vector<double> inv(static_cast<std::size_t>(channels));
  for (int c = 0; c < channels; ++c)
    inv[c] = 1.0 / std::sqrt(static_cast<double>(batch_var[c]) + epsilon);
  std::vector<double> sum_dy, sum_dy_xhat;
  channel_sums(rows, channels, [&](long r, int c) { return static_cast<double>(grad_y[r * channels + c]); },
               sum_dy);
  channel_sums(
      rows, channels,
      [&](long r, int c) {
        return static_cast<double>(grad_y[r * channels + c]) * (x[r * channels + c] - batch_mean[c]) *
               inv[c];
      },
      sum_dy_xhat);
  const double m = static_cast<double>(rows);
  std::vector<float> a(static_cast<std::size_t>(channels)), b(static_cast<std::size_t>(channels)),
      k(static_cast<std::size_t>(channels));
  for (int c = 0; c < channels; ++c) {
    if (!grad_gamma.empty()) grad_gamma[c] += static_cast<float>(sum_dy_xhat[c]);
    grad_beta[c] += static_cast<float>(sum_dy[c]);
    const double scale = (gamma.empty() ? 1.0 : gamma[c]) * inv[c];
    // grad_x = scale * (dy - mean(dy) - xhat * mean(dy*xhat))
    a[c] = static_cast<float>(scale);
    b[c] = static_cast<float>(scale * sum_dy[c] / m);
    k[c] = static_cast<float>(scale * sum_dy_xhat[c] / m * inv[c]);
  }
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
    const float* xr = x.data() + r * channels;
    const float* dyr = grad_y.data() + r * channels;
    float* dxr = grad_x.data() + r * channels;
#pragma omp simd
    for (int c = 0; c < channels; ++c)
      dxr[c] = a[c] * dyr[c] - b[c] - k[c] * (xr[c] - batch_mean[c]);
  }
}

void global_avg_pool_forward(int batch, long spatial, int channels, std::span<const float> input,
                             std::span<float> output) {
#pragma omp parallel for schedule(static)
  for (int n = 0; n < batch; ++n) {
    std::vector<double> acc(static_cast<std::size_t>(channels), 0.0);
    for (long s = 0; s < spatial; ++s) {
      const float* in = input.data() + (n * spatial + s) * channels;
      for (int c = 0; c < channels; ++c) acc[c] += in[c];
    }
    for (int c = 0; c < channels; ++c)
      output[static_cast<long>(n) * channels + c] = static_cast<float>(acc[c] / spatial);
  }
}

void global_avg_pool_backward(int batch, long spatial, int channels,
                              std::span<const float> grad_output, std::span<float> grad_input) {
  const float scale = 1.0f / static_cast<float>(spatial);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < batch; ++n) {
    for (long s = 0; s < spatial; ++s) {
      const float* dy = grad_output.data() + static_cast<long>(n) * channels;
      float* dst = grad_input.data() + (n * spatial + s) * channels;
#pragma omp simd
      for (int c = 0; c < channels; ++c) dst[c] = dy[c] * scale;
    }
  }
}

void dense_forward(int rows, int in, int out, std::span<const float> x, std::span<const float> w,
                   std::span<const float> b, std::span<float> y) {
  for (int r = 0; r < rows; ++r) {
    if (b.empty()) {
      std::fill(y.begin() + static_cast<long>(r) * out, y.begin() + static_cast<long>(r + 1) * out, 0.0f);
    } else {
      std::copy(b.begin(), b.end(), y.begin() + static_cast<long>(r) * out);
    }
  }
  cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, rows, out, in, 1.0f, x.data(), in,
              w.data(), out, 1.0f, y.data(), out);
}

void dense_backward(int rows, int in, int out, std::span<const float> x, std::span<const float> w,
                    std::span<const float> grad_y, std::span<float> grad_x,
                    std::span<float> grad_w, std::span<float> grad_b) {
  if (!grad_x.empty()) {
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, rows, in, out, 1.0f, grad_y.data(), out,
                w.data(), out, 0.0f, grad_x.data(), in);
  }
  cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, in, out, rows, 1.0f, x.data(), in,
              grad_y.data(), out, 1.0f, grad_w.data(), out);
  if (!grad_b.empty()) {
    for (int r = 0; r < rows; ++r)
      for (int o = 0; o < out; ++o) grad_b[o] += grad_y[static_cast<long>(r) * out + o];
  }
}

void relu_forward(std::span<const float> x, std::span<float> y) {
  const long n = static_cast<long>(x.size());
#pragma omp parallel for simd schedule(static)
  for (long i = 0; i < n; ++i) y[i] = x[i] < 0.0f ? 0.0f : x[i];
}

void relu_backward(std::span<const float> y, std::span<const float> grad_y,
                   std::span<float> grad_x) {
  const long n = static_cast<long>(y.size());
#pragma omp parallel for simd schedule(static)
  for (long i = 0; i < n; ++i) grad_x[i] = y[i] > 0.0f ? grad_y[i] : 0.0f;
}

}  // namespace tumorbench::kernels::parallel
