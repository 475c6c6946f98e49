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

// Parallel kernels against the serial reference, and the reference
// backward passes against central finite differences.

#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tumorbench/kernels/kernels.hpp"

namespace tumorbench::kernels {
namespace {

using testing::max_abs_diff;
using testing::random_floats;

struct ConvCase {
  int batch, h, w, in_c, out_c, k, stride;
  PaddingMode mode;
};

class ConvKernels : public ::testing::TestWithParam<ConvCase> {
 protected:
  ConvGeometry geometry() const {
    const auto& p = GetParam();
    return make_conv_geometry(p.batch, p.h, p.w, p.in_c, p.out_c, p.k, p.k, p.stride, p.stride, p.mode);
  }
};

TEST_P(ConvKernels, ForwardMatchesReference) {
  const auto g = geometry();
  const auto x = random_floats(static_cast<std::size_t>(g.input_size()), 1);
  const auto w = random_floats(static_cast<std::size_t>(g.kernel_size()), 2);
  std::vector<float> a(static_cast<std::size_t>(g.output_size())), b(a.size());
  parallel::conv2d_forward(g, x, w, a);
  reference::conv2d_forward(g, x, w, b);
  EXPECT_LT(max_abs_diff(a, b), 1e-4);
}

TEST_P(ConvKernels, BackwardMatchesReference) {
  const auto g = geometry();
  const auto x = random_floats(static_cast<std::size_t>(g.input_size()), 3);
  const auto w = random_floats(static_cast<std::size_t>(g.kernel_size()), 4);
  const auto gy = random_floats(static_cast<std::size_t>(g.output_size()), 5);
  std::vector<float> gx_a(x.size()), gx_b(x.size(), 7.0f);
  parallel::conv2d_backward_input(g, gy, w, gx_a);
  reference::conv2d_backward_input(g, gy, w, gx_b);
  EXPECT_LT(max_abs_diff(gx_a, gx_b), 1e-4);
  std::vector<float> gw_a(w.size(), 0.5f), gw_b(w.size(), 0.5f);
  parallel::conv2d_backward_kernel(g, x, gy, gw_a);
  reference::conv2d_backward_kernel(g, x, gy, gw_b);
  EXPECT_LT(max_abs_diff(gw_a, gw_b), 1e-3);
}

TEST_P(ConvKernels, DepthwiseMatchesReference) {
  auto g = geometry();
  g = make_conv_geometry(g.batch, g.in_h, g.in_w, g.in_c, g.in_c, g.kernel_h, g.kernel_w, g.stride_h, g.stride_w,
                         GetParam().mode);
  const auto x = random_floats(static_cast<std::size_t>(g.input_size()), 6);
  const auto w = random_floats(static_cast<std::size_t>(g.kernel_h * g.kernel_w * g.in_c), 7);
  const auto gy = random_floats(static_cast<std::size_t>(g.output_size()), 8);
  std::vector<float> a(static_cast<std::size_t>(g.output_size())), b(a.size());
  parallel::depthwise_conv2d_forward(g, x, w, a);
  reference::depthwise_conv2d_forward(g, x, w, b);
  EXPECT_LT(max_abs_diff(a, b), 1e-5);
  std::vector<float> gx_a(x.size()), gx_b(x.size());
  parallel::depthwise_conv2d_backward_input(g, gy, w, gx_a);
  reference::depthwise_conv2d_backward_input(g, gy, w, gx_b);
  EXPECT_LT(max_abs_diff(gx_a, gx_b), 1e-5);
  std::vector<float> gw_a(w.size()), gw_b(w.size());
  parallel::depthwise_conv2d_backward_kernel(g, x, gy, gw_a);
  reference::depthwise_conv2d_backward_kernel(g, x, gy, gw_b);
  EXPECT_LT(max_abs_diff(gw_a, gw_b), 1e-4);
}

TEST_P(ConvKernels, PoolingMatchesReference) {
  const auto& p = GetParam();
  const auto g = make_pool_geometry(p.batch, p.h, p.w, p.in_c, p.k, p.k, p.stride, p.stride, p.mode);
  const auto x = random_floats(static_cast<std::size_t>(g.input_size()), 9);
  const auto gy = random_floats(static_cast<std::size_t>(g.output_size()), 10);
  std::vector<float> a(static_cast<std::size_t>(g.output_size())), b(a.size());
  parallel::max_pool_forward(g, x, a);
  reference::max_pool_forward(g, x, b);
  EXPECT_EQ(a, b);
  parallel::avg_pool_forward(g, x, a);
  reference::avg_pool_forward(g, x, b);
  EXPECT_LT(max_abs_diff(a, b), 1e-6);
  std::vector<float> gx_a(x.size()), gx_b(x.size());
  parallel::max_pool_backward(g, x, gy, gx_a);
  reference::max_pool_backward(g, x, gy, gx_b);
  EXPECT_LT(max_abs_diff(gx_a, gx_b), 1e-6);
  parallel::avg_pool_backward(g, gy, gx_a);
  reference::avg_pool_backward(g, gy, gx_b);
  EXPECT_LT(max_abs_diff(gx_a, gx_b), 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Shapes, ConvKernels,
                         ::testing::Values(ConvCase{1, 7, 7, 3, 4, 3, 1, PaddingMode::kSame},
                                           ConvCase{2, 9, 8, 5, 6, 3, 2, PaddingMode::kSame},
                                           ConvCase{2, 9, 9, 4, 3, 3, 2, PaddingMode::kValid},
                                           ConvCase{1, 8, 8, 6, 8, 1, 1, PaddingMode::kValid},
                                           ConvCase{1, 10, 11, 2, 3, 7, 2, PaddingMode::kSame},
                                           ConvCase{3, 6, 6, 8, 8, 2, 2, PaddingMode::kValid}));

TEST(PaddingRules, FollowTensorFlowConventions) {
  EXPECT_EQ(axis_padding(256, 3, 2, PaddingMode::kSame).out, 128);
  EXPECT_EQ(axis_padding(256, 3, 2, PaddingMode::kSame).pad_before, 0);
  EXPECT_EQ(axis_padding(7, 3, 1, PaddingMode::kSame).pad_before, 1);
  EXPECT_EQ(axis_padding(7, 3, 2, PaddingMode::kValid).out, 3);
  EXPECT_EQ(axis_padding(8, 7, 2, PaddingMode::kSame).pad_before, 2);
}

TEST(BatchNormKernels, MatchReference) {
  const long rows = 37;
  const int c = 5;
  const auto x = random_floats(static_cast<std::size_t>(rows * c), 11, -3.0, 3.0);
  const auto gamma = random_floats(c, 12, 0.5, 1.5), beta = random_floats(c, 13);
  const auto gy = random_floats(x.size(), 14);
  std::vector<float> ya(x.size()), yb(x.size()), ma(c), mb(c), va(c), vb(c);
  parallel::batch_norm_training_forward(rows, c, x, gamma, beta, 1e-3f, ya, ma, va);
  reference::batch_norm_training_forward(rows, c, x, gamma, beta, 1e-3f, yb, mb, vb);
  EXPECT_LT(max_abs_diff(ya, yb), 1e-5);
  EXPECT_LT(max_abs_diff(va, vb), 1e-5);
  std::vector<float> gxa(x.size()), gxb(x.size()), gga(c), ggb(c), gba(c), gbb(c);
  parallel::batch_norm_backward(rows, c, x, gy, gamma, ma, va, 1e-3f, gxa, gga, gba);
  reference::batch_norm_backward(rows, c, x, gy, gamma, mb, vb, 1e-3f, gxb, ggb, gbb);
  EXPECT_LT(max_abs_diff(gxa, gxb), 1e-5);
  EXPECT_LT(max_abs_diff(gga, ggb), 1e-4);
  EXPECT_LT(max_abs_diff(gba, gbb), 1e-4);
  parallel::batch_norm_inference_forward(rows, c, x, gamma, beta, ma, va, 1e-3f, ya);
  reference::batch_norm_inference_forward(rows, c, x, gamma, beta, mb, vb, 1e-3f, yb);
  EXPECT_LT(max_abs_diff(ya, yb), 1e-5);
}

TEST(DenseKernels, MatchReference) {
  const int rows = 6, in = 17, out = 9;
  const auto x = random_floats(rows * in, 15), w = random_floats(in * out, 16), b = random_floats(out, 17);
  const auto gy = random_floats(rows * out, 18);
  std::vector<float> ya(rows * out), yb(rows * out);
  parallel::dense_forward(rows, in, out, x, w, b, ya);
  reference::dense_forward(rows, in, out, x, w, b, yb);
  EXPECT_LT(max_abs_diff(ya, yb), 1e-5);
  std::vector<float> gxa(x.size()), gxb(x.size()), gwa(w.size()), gwb(w.size()), gba(out), gbb(out);
  parallel::dense_backward(rows, in, out, x, w, gy, gxa, gwa, gba);
  reference::dense_backward(rows, in, out, x, w, gy, gxb, gwb, gbb);
  EXPECT_LT(max_abs_diff(gxa, gxb), 1e-5);
  EXPECT_LT(max_abs_diff(gwa, gwb), 1e-5);
  EXPECT_LT(max_abs_diff(gba, gbb), 1e-5);
}

TEST(GlobalPoolAndRelu, MatchReference) {
  const int batch = 2, c = 4;
  const long spatial = 15;
  const auto x = random_floats(static_cast<std::size_t>(batch * spatial * c), 19);
  std::vector<float> a(batch * c), b(batch * c);
  parallel::global_avg_pool_forward(batch, spatial, c, x, a);
  reference::global_avg_pool_forward(batch, spatial, c, x, b);
  EXPECT_LT(max_abs_diff(a, b), 1e-6);
  std::vector<float> ra(x.size()), rb(x.size());
  parallel::relu_forward(x, ra);
  reference::relu_forward(x, rb);
  EXPECT_EQ(ra, rb);
}

TEST(Relu, PropagatesNaN) {
  const std::vector<float> x = {-1.0f, 0.0f, 2.0f, std::nanf("")};
  for (auto* fn : {&parallel::relu_forward, &reference::relu_forward}) {
    std::vector<float> y(x.size());
    fn(x, y);
    EXPECT_EQ(y[0], 0.0f);
    EXPECT_EQ(y[1], 0.0f);
    EXPECT_EQ(y[2], 2.0f);
    EXPECT_TRUE(std::isnan(y[3]));
  }
}

// Central difference of the scalar L = sum(out * probe) w.r.t. `param`.
double numeric_grad(std::vector<float>& param, std::size_t i, const std::vector<float>& probe,
                    const std::function<std::vector<float>()>& run) {
  const float saved = param[i];
  const float h = 1e-2f;
  auto dot = [&probe](const std::vector<float>& out) {
    double s = 0.0;
    for (std::size_t j = 0; j < out.size(); ++j) s += static_cast<double>(out[j]) * probe[j];
    return s;
  };
  param[i] = saved + h;
  const double up = dot(run());
  param[i] = saved - h;
  const double down = dot(run());
  param[i] = saved;
  return (up - down) / (2.0 * h);
}

TEST(GradientCheck, ConvolutionInputAndKernel) {
  const auto g = make_conv_geometry(1, 5, 6, 2, 3, 3, 3, 2, 2, PaddingMode::kSame);
  auto x = random_floats(static_cast<std::size_t>(g.input_size()), 20);
  auto w = random_floats(static_cast<std::size_t>(g.kernel_size()), 21);
  const auto probe = random_floats(static_cast<std::size_t>(g.output_size()), 22);
  auto run = [&] {
    std::vector<float> y(static_cast<std::size_t>(g.output_size()));
    reference::conv2d_forward(g, x, w, y);
    return y;
  };
  std::vector<float> gx(x.size()), gw(w.size(), 0.0f);
  reference::conv2d_backward_input(g, probe, w, gx);
  reference::conv2d_backward_kernel(g, x, probe, gw);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(gx[i], numeric_grad(x, i, probe, run), 2e-3) << i;
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(gw[i], numeric_grad(w, i, probe, run), 2e-3) << i;
}

TEST(GradientCheck, DepthwiseInputAndKernel) {
  const auto g = make_conv_geometry(1, 6, 5, 3, 3, 3, 3, 1, 1, PaddingMode::kSame);
  auto x = random_floats(static_cast<std::size_t>(g.input_size()), 23);
  auto w = random_floats(27, 24);
  const auto probe = random_floats(static_cast<std::size_t>(g.output_size()), 25);
  auto run = [&] {
    std::vector<float> y(static_cast<std::size_t>(g.output_size()));
    reference::depthwise_conv2d_forward(g, x, w, y);
    return y;
  };
  std::vector<float> gx(x.size()), gw(w.size(), 0.0f);
  reference::depthwise_conv2d_backward_input(g, probe, w, gx);
  reference::depthwise_conv2d_backward_kernel(g, x, probe, gw);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(gx[i], numeric_grad(x, i, probe, run), 2e-3) << i;
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(gw[i], numeric_grad(w, i, probe, run), 2e-3) << i;
}

TEST(GradientCheck, BatchNormTraining) {
  const long rows = 8;
  const int c = 3;
  auto x = random_floats(static_cast<std::size_t>(rows * c), 26, -2.0, 2.0);
  auto gamma = random_floats(c, 27, 0.5, 1.5);
  auto beta = random_floats(c, 28);
  const auto probe = random_floats(x.size(), 29);
  std::vector<float> mean(c), var(c);
  auto run = [&] {
    std::vector<float> y(x.size()), m(c), v(c);
    reference::batch_norm_training_forward(rows, c, x, gamma, beta, 1e-3f, y, m, v);
    return y;
  };
  std::vector<float> y(x.size());
  reference::batch_norm_training_forward(rows, c, x, gamma, beta, 1e-3f, y, mean, var);
  std::vector<float> gx(x.size()), gg(c, 0.0f), gb(c, 0.0f);
  reference::batch_norm_backward(rows, c, x, probe, gamma, mean, var, 1e-3f, gx, gg, gb);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(gx[i], numeric_grad(x, i, probe, run), 5e-3) << i;
  for (std::size_t i = 0; i < gamma.size(); ++i) EXPECT_NEAR(gg[i], numeric_grad(gamma, i, probe, run), 5e-3);
  for (std::size_t i = 0; i < beta.size(); ++i) EXPECT_NEAR(gb[i], numeric_grad(beta, i, probe, run), 5e-3);
}

TEST(GradientCheck, DenseWeights) {
  const int rows = 3, in = 4, out = 5;
  auto x = random_floats(rows * in, 30);
  auto w = random_floats(in * out, 31);
  auto b = random_floats(out, 32);
  const auto probe = random_floats(rows * out, 33);
  auto run = [&] {
    std::vector<float> y(rows * out);
    reference::dense_forward(rows, in, out, x, w, b, y);
    return y;
  };
  std::vector<float> gx(x.size()), gw(w.size(), 0.0f), gb(b.size(), 0.0f);
  reference::dense_backward(rows, in, out, x, w, probe, gx, gw, gb);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(gx[i], numeric_grad(x, i, probe, run), 1e-3);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(gw[i], numeric_grad(w, i, probe, run), 1e-3);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(gb[i], numeric_grad(b, i, probe, run), 1e-3);
}

}  // namespace
}  // namespace tumorbench::kernels
