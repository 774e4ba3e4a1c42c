// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

// Low-level numeric kernels. Every kernel computes each output element in a
// fixed arithmetic order owned by exactly one thread, so results are
// bit-identical across thread counts and across the serial/OpenMP backends.
// Reductions accumulate per fixed-size block in double and combine the block
// sums in index order for the same reason.
//
// The ref namespace holds straightforward textbook implementations used as
// correctness oracles in the tests and as the baseline in the benchmarks.
// They are serial and make no attempt at being fast.

namespace depthdecode::kernels {

enum class Backend { Serial, OpenMP };

void set_backend(Backend b);
Backend backend();
int max_threads();

// -- convolution (stride 1, square kernel, symmetric zero padding) ----------
//
// x:    [N, Cin, H, W]
// w:    [Cout, Cin, K, K]
// b:    [Cout]
// out:  [N, Cout, Ho, Wo] with Ho = H + 2P - K + 1, Wo likewise

void conv2d_forward(const float* x, const float* w, const float* b, float* out,
                    int N, int Cin, int H, int W, int Cout, int K, int P);

void conv2d_backward_input(const float* gout, const float* w, float* gin,
                           int N, int Cin, int H, int W, int Cout, int K, int P);

void conv2d_backward_params(const float* x, const float* gout, float* gw, float* gb,
                            int N, int Cin, int H, int W, int Cout, int K, int P);

// -- fully connected ---------------------------------------------------------
//
// x: [N, I], w: [O, I], b: [O], out: [N, O]

void linear_forward(const float* x, const float* w, const float* b, float* out,
                    int N, int I, int O);
void linear_backward_input(const float* gout, const float* w, float* gin,
                           int N, int I, int O);
void linear_backward_params(const float* x, const float* gout, float* gw, float* gb,
                            int N, int I, int O);

// -- 2x2 max pooling, stride 2 ----------------------------------------------
//
// Output is floor(H/2) x floor(W/2); an odd trailing row or column is
// ignored. argmax stores the flat in-plane index of the winning input
// element (first occurrence wins on ties).

void maxpool2_forward(const float* x, float* out, int32_t* argmax,
                      int N, int C, int H, int W);
void maxpool2_backward(const float* gout, const int32_t* argmax, float* gin,
                       int N, int C, int H, int W);

// -- average pooling to an exact divisor target size -------------------------

void avgpool_forward(const float* x, float* out,
                     int N, int C, int H, int W, int oh, int ow);
void avgpool_backward(const float* gout, float* gin,
                      int N, int C, int H, int W, int oh, int ow);

// -- nearest-neighbour 2x upsampling -----------------------------------------

void upsample2_forward(const float* x, float* out, int N, int C, int H, int W);
void upsample2_backward(const float* gout, float* gin, int N, int C, int H, int W);

// -- activations --------------------------------------------------------------

void relu_forward(const float* x, float* out, int64_t n);
void relu_backward(const float* x, const float* gout, float* gin, int64_t n);
// sigmoid_backward takes the forward *output* y, not the input.
void sigmoid_forward(const float* x, float* out, int64_t n);
void sigmoid_backward(const float* y, const float* gout, float* gin, int64_t n);

// -- reductions and vector ops ------------------------------------------------

double sum(const float* x, int64_t n);
double sum_abs(const float* x, int64_t n);
double dot(const float* a, const float* b, int64_t n);
double sum_abs_diff(const float* a, const float* b, int64_t n);
double sum_sq_diff(const float* a, const float* b, int64_t n);
float max_abs_diff(const float* a, const float* b, int64_t n);

void axpy(float* y, float a, const float* x, int64_t n);  // y += a*x
void scale(float* x, float a, int64_t n);

}  // namespace depthdecode::kernels

namespace depthdecode::ref {

void conv2d_forward(const float* x, const float* w, const float* b, float* out,
                    int N, int Cin, int H, int W, int Cout, int K, int P);
void conv2d_backward_input(const float* gout, const float* w, float* gin,
                           int N, int Cin, int H, int W, int Cout, int K, int P);
void conv2d_backward_params(const float* x, const float* gout, float* gw, float* gb,
                            int N, int Cin, int H, int W, int Cout, int K, int P);

void linear_forward(const float* x, const float* w, const float* b, float* out,
                    int N, int I, int O);
void linear_backward_input(const float* gout, const float* w, float* gin,
                           int N, int I, int O);
void linear_backward_params(const float* x, const float* gout, float* gw, float* gb,
                            int N, int I, int O);

void maxpool2_forward(const float* x, float* out, int32_t* argmax,
                      int N, int C, int H, int W);
void maxpool2_backward(const float* gout, const int32_t* argmax, float* gin,
                       int N, int C, int H, int W);

void avgpool_forward(const float* x, float* out,
                     int N, int C, int H, int W, int oh, int ow);
void avgpool_backward(const float* gout, float* gin,
                      int N, int C, int H, int W, int oh, int ow);

void upsample2_forward(const float* x, float* out, int N, int C, int H, int W);
void upsample2_backward(const float* gout, float* gin, int N, int C, int H, int W);

double sum(const float* x, int64_t n);
double dot(const float* a, const float* b, int64_t n);

}  // namespace depthdecode::ref
