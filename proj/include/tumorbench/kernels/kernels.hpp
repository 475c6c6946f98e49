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

// Compute kernels for the network layers.
//
// Two implementations share one signature set:
//   kernels::parallel  - OpenMP loops plus BLAS (im2col + sgemm) for convolution.
//   kernels::reference - straightforward serial loops, kept as the test oracle.
//
// All image tensors are NHWC, convolution kernels HWIO, depthwise kernels
// HWC (channel multiplier 1). "Backward" functions that produce parameter
// gradients ACCUMULATE into their output; input-gradient functions OVERWRITE.

#ifndef TUMORBENCH_KERNELS_KERNELS_HPP_
#define TUMORBENCH_KERNELS_KERNELS_HPP_

#include <span>

namespace tumorbench::kernels {

struct ConvGeometry {
  int batch = 1;
  int in_h = 0, in_w = 0, in_c = 0;
  int out_h = 0, out_w = 0, out_c = 0;
  int kernel_h = 1, kernel_w = 1;
  int stride_h = 1, stride_w = 1;
  int pad_top = 0, pad_left = 0;

  long input_size() const { return static_cast<long>(batch) * in_h * in_w * in_c; }
  long output_size() const { return static_cast<long>(batch) * out_h * out_w * out_c; }
  long kernel_size() const { return static_cast<long>(kernel_h) * kernel_w * in_c * out_c; }
};

enum class PaddingMode { kValid, kSame };

// Output extent and leading pad for one spatial axis, TensorFlow conventions.
struct AxisPadding {
  int out = 0;
  int pad_before = 0;
};
AxisPadding axis_padding(int in, int kernel, int stride, PaddingMode mode);

ConvGeometry make_conv_geometry(int batch, int in_h, int in_w, int in_c, int out_c, int kernel_h,
                                int kernel_w, int stride_h, int stride_w, PaddingMode mode);

// Pool geometry reuses ConvGeometry with out_c == in_c.
ConvGeometry make_pool_geometry(int batch, int in_h, int in_w, int channels, int pool_h,
                                int pool_w, int stride_h, int stride_w, PaddingMode mode);

namespace parallel {

void conv2d_forward(const ConvGeometry& g, std::span<const float> input,
                    std::span<const float> kernel, std::span<float> output);
void conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                           std::span<const float> kernel, std::span<float> grad_input);
void conv2d_backward_kernel(const ConvGeometry& g, std::span<const float> input,
                            std::span<const float> grad_output, std::span<float> grad_kernel);

void depthwise_conv2d_forward(const ConvGeometry& g, std::span<const float> input,
                              std::span<const float> kernel, std::span<float> output);
void depthwise_conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                                     std::span<const float> kernel, std::span<float> grad_input);
void depthwise_conv2d_backward_kernel(const ConvGeometry& g, std::span<const float> input,
                                      std::span<const float> grad_output,
                                      std::span<float> grad_kernel);

void max_pool_forward(const ConvGeometry& g, std::span<const float> input, std::span<float> output);
void max_pool_backward(const ConvGeometry& g, std::span<const float> input,
                       std::span<const float> grad_output, std::span<float> grad_input);
// Averages only over in-bounds taps (TensorFlow 'same' semantics).
void avg_pool_forward(const ConvGeometry& g, std::span<const float> input, std::span<float> output);
void avg_pool_backward(const ConvGeometry& g, std::span<const float> grad_output,
                       std::span<float> grad_input);

// Batch normalization over `rows` samples of `channels` features. `gamma`
// may be empty (scale disabled, treated as 1).
void batch_norm_training_forward(long rows, int channels, std::span<const float> x,
                                 std::span<const float> gamma, std::span<const float> beta,
                                 float epsilon, std::span<float> y, std::span<float> batch_mean,
                                 std::span<float> batch_var);
void batch_norm_inference_forward(long rows, int channels, std::span<const float> x,
                                  std::span<const float> gamma, std::span<const float> beta,
                                  std::span<const float> mean, std::span<const float> var,
                                  float epsilon, std::span<float> y);
// Gradient of the training-mode transform. grad_gamma may be empty.
void batch_norm_backward(long rows, int channels, std::span<const float> x,
                         std::span<const float> grad_y, std::span<const float> gamma,
                         std::span<const float> batch_mean, std::span<const float> batch_var,
                         float epsilon, std::span<float> grad_x, std::span<float> grad_gamma,
                         std::span<float> grad_beta);

void global_avg_pool_forward(int batch, long spatial, int channels, std::span<const float> input,
                             std::span<float> output);
void global_avg_pool_backward(int batch, long spatial, int channels,
                              std::span<const float> grad_output, std::span<float> grad_input);

// y[rows, out] = x[rows, in] * w[in, out] + b
void dense_forward(int rows, int in, int out, std::span<const float> x, std::span<const float> w,
                   std::span<const float> b, std::span<float> y);
void dense_backward(int rows, int in, int out, std::span<const float> x, std::span<const float> w,
                    std::span<const float> grad_y, std::span<float> grad_x,
                    std::span<float> grad_w, std::span<float> grad_b);

void relu_forward(std::span<const float> x, std::span<float> y);
void relu_backward(std::span<const float> y, std::span<const float> grad_y,
                   std::span<float> grad_x);

}  // namespace parallel

namespace reference {

void conv2d_forward(const ConvGeometry& g, std::span<const float> input,
                    std::span<const float> kernel, std::span<float> output);
void conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                           std::span<const float> kernel, std::span<float> grad_input);
void conv2d_backward_kernel(const ConvGeometry& g, std::span<const float> input,
                            std::span<const float> grad_output, std::span<float> grad_kernel);

void depthwise_conv2d_forward(const ConvGeometry& g, std::span<const float> input,
                              std::span<const float> kernel, std::span<float> output);
void depthwise_conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                                     std::span<const float> kernel, std::span<float> grad_input);
void depthwise_conv2d_backward_kernel(const ConvGeometry& g, std::span<const float> input,
                                      std::span<const float> grad_output,
                                      std::span<float> grad_kernel);

void max_pool_forward(const ConvGeometry& g, std::span<const float> input, std::span<float> output);
void max_pool_backward(const ConvGeometry& g, std::span<const float> input,
                       std::span<const float> grad_output, std::span<float> grad_input);
void avg_pool_forward(const ConvGeometry& g, std::span<const float> input, std::span<float> output);
void avg_pool_backward(const ConvGeometry& g, std::span<const float> grad_output,
                       std::span<float> grad_input);

void batch_norm_training_forward(long rows, int channels, std::span<const float> x,
                                 std::span<const float> gamma, std::span<const float> beta,
                                 float epsilon, std::span<float> y, std::span<float> batch_mean,
                                 std::span<float> batch_var);
void batch_norm_inference_forward(long rows, int channels, std::span<const float> x,
                                  std::span<const float> gamma, std::span<const float> beta,
                                  std::span<const float> mean, std::span<const float> var,
                                  float epsilon, std::span<float> y);
void batch_norm_backward(long rows, int channels, std::span<const float> x,
                         std::span<const float> grad_y, std::span<const float> gamma,
                         std::span<const float> batch_mean, std::span<const float> batch_var,
                         float epsilon, std::span<float> grad_x, std::span<float> grad_gamma,
                         std::span<float> grad_beta);

void global_avg_pool_forward(int batch, long spatial, int channels, std::span<const float> input,
                             std::span<float> output);
void global_avg_pool_backward(int batch, long spatial, int channels,
                              std::span<const float> grad_output, std::span<float> grad_input);

void dense_forward(int rows, int in, int out, std::span<const float> x, std::span<const float> w,
                   std::span<const float> b, std::span<float> y);
void dense_backward(int rows, int in, int out, std::span<const float> x, std::span<const float> w,
                    std::span<const float> grad_y, std::span<float> grad_x,
                    std::span<float> grad_w, std::span<float> grad_b);

void relu_forward(std::span<const float> x, std::span<float> y);
void relu_backward(std::span<const float> y, std::span<const float> grad_y,
                   std::span<float> grad_x);

}  // namespace reference

}  // namespace tumorbench::kernels

#endif  // TUMORBENCH_KERNELS_KERNELS_HPP_
