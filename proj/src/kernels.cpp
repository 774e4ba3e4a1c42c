// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include "depthdecode/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace depthdecode::kernels {

namespace {

std::atomic<Backend> g_backend{Backend::OpenMP};

bool par() { return g_backend.load(std::memory_order_relaxed) == Backend::OpenMP; }

// Row primitives shared by the serial and OpenMP drivers. Both backends run
// the same per-plane code, only the outer plane loop is scheduled differently,
// which is what keeps results bit-identical between them.

inline void axpy_row(float* __restrict y, const float* __restrict x, float a, int n) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

inline double dot_row(const float* a, const float* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

inline double sum_row(const float* a, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i];
    return s;
}

// Zero-pad one H x W plane into a (H+2P) x (W+2P) buffer.
void pad_plane(const float* src, float* dst, int H, int W, int P) {
    const int Wp = W + 2 * P;
    std::memset(dst, 0, sizeof(float) * static_cast<size_t>(H + 2 * P) * Wp);
    for (int y = 0; y < H; ++y)
        std::memcpy(dst + static_cast<int64_t>(y + P) * Wp + P,
                    src + static_cast<int64_t>(y) * W, sizeof(float) * W);
}

// Pad every (n, c) plane of x into xp. Parallel over planes.
void pad_batch(const float* x, float* xp, int planes, int H, int W, int P) {
    const int64_t in_plane = static_cast<int64_t>(H) * W;
    const int64_t out_plane = static_cast<int64_t>(H + 2 * P) * (W + 2 * P);
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int i = 0; i < planes; ++i)
        pad_plane(x + i * in_plane, xp + i * out_plane, H, W, P);
}

constexpr int64_t kBlock = 8192;

template <typename F>
double blocked_reduce(int64_t n, F block_fn) {
    const int64_t nblocks = (n + kBlock - 1) / kBlock;
    if (nblocks <= 1) return n > 0 ? block_fn(0, n) : 0.0;
    std::vector<double> partial(static_cast<size_t>(nblocks));
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int64_t bi = 0; bi < nblocks; ++bi) {
        const int64_t lo = bi * kBlock;
        partial[static_cast<size_t>(bi)] = block_fn(lo, std::min(lo + kBlock, n));
    }
    double s = 0.0;
    for (double v : partial) s += v;
    return s;
}

}  // namespace

void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }
Backend backend() { return g_backend.load(std::memory_order_relaxed); }

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void conv2d_forward(const float* x, const float* w, const float* b, float* out,
                    int N, int Cin, int H, int W, int Cout, int K, int P) {
    const int Ho = H + 2 * P - K + 1;
    const int Wo = W + 2 * P - K + 1;
    assert(Ho > 0 && Wo > 0);
    const int Hp = H + 2 * P, Wp = W + 2 * P;
    const int64_t xp_plane = static_cast<int64_t>(Hp) * Wp;
    std::vector<float> xp(static_cast<size_t>(N) * Cin * xp_plane);
    pad_batch(x, xp.data(), N * Cin, H, W, P);

    const int64_t out_plane = static_cast<int64_t>(Ho) * Wo;
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int plane = 0; plane < N * Cout; ++plane) {
        const int n = plane / Cout;
        const int co = plane % Cout;
        float* o = out + plane * out_plane;
        for (int64_t i = 0; i < out_plane; ++i) o[i] = b[co];
        for (int ci = 0; ci < Cin; ++ci) {
            const float* xc = xp.data() + (static_cast<int64_t>(n) * Cin + ci) * xp_plane;
            const float* wc = w + ((static_cast<int64_t>(co) * Cin + ci) * K) * K;
            for (int ky = 0; ky < K; ++ky)
                for (int kx = 0; kx < K; ++kx) {
                    const float wv = wc[ky * K + kx];
                    for (int y = 0; y < Ho; ++y)
                        axpy_row(o + static_cast<int64_t>(y) * Wo,
                                 xc + static_cast<int64_t>(y + ky) * Wp + kx, wv, Wo);
                }
        }
    }
}

void conv2d_backward_input(const float* gout, const float* w, float* gin,
                           int N, int Cin, int H, int W, int Cout, int K, int P) {
    const int Ho = H + 2 * P - K + 1;
    const int Wo = W + 2 * P - K + 1;
    // Input gradient is a full correlation of gout with the spatially flipped
    // weights, i.e. a convolution with padding K-1-P.
    const int Q = K - 1 - P;
    assert(Q >= 0);
    const int Hq = Ho + 2 * Q, Wq = Wo + 2 * Q;
    const int64_t gp_plane = static_cast<int64_t>(Hq) * Wq;
    std::vector<float> gp(static_cast<size_t>(N) * Cout * gp_plane);
    pad_batch(gout, gp.data(), N * Cout, Ho, Wo, Q);

    const int64_t in_plane = static_cast<int64_t>(H) * W;
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int plane = 0; plane < N * Cin; ++plane) {
        const int n = plane / Cin;
        const int ci = plane % Cin;
        float* g = gin + plane * in_plane;
        std::memset(g, 0, sizeof(float) * static_cast<size_t>(in_plane));
        for (int co = 0; co < Cout; ++co) {
            const float* gc = gp.data() + (static_cast<int64_t>(n) * Cout + co) * gp_plane;
            const float* wc = w + ((static_cast<int64_t>(co) * Cin + ci) * K) * K;
            for (int ky = 0; ky < K; ++ky)
                for (int kx = 0; kx < K; ++kx) {
                    const float wv = wc[(K - 1 - ky) * K + (K - 1 - kx)];
                    for (int y = 0; y < H; ++y)
                        axpy_row(g + static_cast<int64_t>(y) * W,
                                 gc + static_cast<int64_t>(y + ky) * Wq + kx, wv, W);
                }
        }
    }
}

void conv2d_backward_params(const float* x, const float* gout, float* gw, float* gb,
                            int N, int Cin, int H, int W, int Cout, int K, int P) {
    const int Ho = H + 2 * P - K + 1;
    const int Wo = W + 2 * P - K + 1;
    const int Hp = H + 2 * P, Wp = W + 2 * P;
    const int64_t xp_plane = static_cast<int64_t>(Hp) * Wp;
    std::vector<float> xp(static_cast<size_t>(N) * Cin * xp_plane);
    pad_batch(x, xp.data(), N * Cin, H, W, P);

    const int64_t gout_plane = static_cast<int64_t>(Ho) * Wo;
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int co = 0; co < Cout; ++co) {
        std::vector<double> acc(static_cast<size_t>(Cin) * K * K, 0.0);
        double bacc = 0.0;
        for (int n = 0; n < N; ++n) {
            const float* gplane = gout + (static_cast<int64_t>(n) * Cout + co) * gout_plane;
            for (int oy = 0; oy < Ho; ++oy) {
                const float* grow = gplane + static_cast<int64_t>(oy) * Wo;
                bacc += sum_row(grow, Wo);
                for (int ci = 0; ci < Cin; ++ci) {
                    const float* xc =
                        xp.data() + (static_cast<int64_t>(n) * Cin + ci) * xp_plane;
                    for (int ky = 0; ky < K; ++ky) {
                        const float* xrow = xc + static_cast<int64_t>(oy + ky) * Wp;
                        double* arow = acc.data() + (static_cast<int64_t>(ci) * K + ky) * K;
                        for (int kx = 0; kx < K; ++kx)
                            arow[kx] += dot_row(grow, xrow + kx, Wo);
                    }
                }
            }
        }
        float* gwc = gw + static_cast<int64_t>(co) * Cin * K * K;
        for (size_t i = 0; i < acc.size(); ++i) gwc[i] = static_cast<float>(acc[i]);
        gb[co] = static_cast<float>(bacc);
    }
}

void linear_forward(const float* x, const float* w, const float* b, float* out,
                    int N, int I, int O) {
    const bool p = par();
#pragma omp parallel for schedule(static) collapse(2) if (p)
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o)
            out[static_cast<int64_t>(n) * O + o] = static_cast<float>(
                b[o] + dot_row(x + static_cast<int64_t>(n) * I,
                               w + static_cast<int64_t>(o) * I, I));
}

void linear_backward_input(const float* gout, const float* w, float* gin,
                           int N, int I, int O) {
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int n = 0; n < N; ++n) {
        float* g = gin + static_cast<int64_t>(n) * I;
        std::memset(g, 0, sizeof(float) * static_cast<size_t>(I));
        for (int o = 0; o < O; ++o)
            axpy_row(g, w + static_cast<int64_t>(o) * I,
                     gout[static_cast<int64_t>(n) * O + o], I);
    }
}

void linear_backward_params(const float* x, const float* gout, float* gw, float* gb,
                            int N, int I, int O) {
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int o = 0; o < O; ++o) {
        std::vector<double> acc(static_cast<size_t>(I), 0.0);
        double bacc = 0.0;
        for (int n = 0; n < N; ++n) {
            const float g = gout[static_cast<int64_t>(n) * O + o];
            bacc += g;
            const float* xr = x + static_cast<int64_t>(n) * I;
            for (int i = 0; i < I; ++i) acc[static_cast<size_t>(i)] += static_cast<double>(g) * xr[i];
        }
        float* gwr = gw + static_cast<int64_t>(o) * I;
        for (int i = 0; i < I; ++i) gwr[i] = static_cast<float>(acc[static_cast<size_t>(i)]);
        gb[o] = static_cast<float>(bacc);
    }
}

void maxpool2_forward(const float* x, float* out, int32_t* argmax,
                      int N, int C, int H, int W) {
    // odd trailing rows/columns are dropped (floor semantics)
    const int oh = H / 2, ow = W / 2;
    const int64_t in_plane = static_cast<int64_t>(H) * W;
    const int64_t out_plane = static_cast<int64_t>(oh) * ow;
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int plane = 0; plane < N * C; ++plane) {
        const float* xi = x + plane * in_plane;
        float* o = out + plane * out_plane;
        int32_t* am = argmax + plane * out_plane;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                int best = (2 * oy) * W + 2 * ox;
                float bv = xi[best];
                // fixed scan order, first max wins on ties
                const int cands[3] = {(2 * oy) * W + 2 * ox + 1,
                                      (2 * oy + 1) * W + 2 * ox,
                                      (2 * oy + 1) * W + 2 * ox + 1};
                for (int c : cands)
                    if (xi[c] > bv) {
                        bv = xi[c];
                        best = c;
                    }
                o[oy * ow + ox] = bv;
                am[oy * ow + ox] = best;
            }
    }
}

void maxpool2_backward(const float* gout, const int32_t* argmax, float* gin,
                       int N, int C, int H, int W) {
    const int oh = H / 2, ow = W / 2;
    const int64_t in_plane = static_cast<int64_t>(H) * W;
    const int64_t out_plane = static_cast<int64_t>(oh) * ow;
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int plane = 0; plane < N * C; ++plane) {
        float* g = gin + plane * in_plane;
        std::memset(g, 0, sizeof(float) * static_cast<size_t>(in_plane));
        const float* go = gout + plane * out_plane;
        const int32_t* am = argmax + plane * out_plane;
        for (int64_t i = 0; i < out_plane; ++i) g[am[i]] += go[i];
    }
}

void avgpool_forward(const float* x, float* out,
                     int N, int C, int H, int W, int oh, int ow) {
    assert(H % oh == 0 && W % ow == 0);
    const int wh = H / oh, ww = W / ow;
    const double inv = 1.0 / (static_cast<double>(wh) * ww);
    const int64_t in_plane = static_cast<int64_t>(H) * W;
    const int64_t out_plane = static_cast<int64_t>(oh) * ow;
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int plane = 0; plane < N * C; ++plane) {
        const float* xi = x + plane * in_plane;
        float* o = out + plane * out_plane;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double s = 0.0;
                for (int dy = 0; dy < wh; ++dy) {
                    const float* row = xi + static_cast<int64_t>(oy * wh + dy) * W + ox * ww;
                    for (int dx = 0; dx < ww; ++dx) s += row[dx];
                }
                o[oy * ow + ox] = static_cast<float>(s * inv);
            }
    }
}

void avgpool_backward(const float* gout, float* gin,
                      int N, int C, int H, int W, int oh, int ow) {
    const int wh = H / oh, ww = W / ow;
    const float inv = 1.0f / (static_cast<float>(wh) * static_cast<float>(ww));
    const int64_t in_plane = static_cast<int64_t>(H) * W;
    const int64_t out_plane = static_cast<int64_t>(oh) * ow;
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int plane = 0; plane < N * C; ++plane) {
        const float* go = gout + plane * out_plane;
        float* g = gin + plane * in_plane;
        for (int y = 0; y < H; ++y)
            for (int x2 = 0; x2 < W; ++x2)
                g[static_cast<int64_t>(y) * W + x2] = go[(y / wh) * ow + (x2 / ww)] * inv;
    }
}

void upsample2_forward(const float* x, float* out, int N, int C, int H, int W) {
    const int64_t in_plane = static_cast<int64_t>(H) * W;
    const int64_t out_plane = in_plane * 4;
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int plane = 0; plane < N * C; ++plane) {
        const float* xi = x + plane * in_plane;
        float* o = out + plane * out_plane;
        for (int y = 0; y < 2 * H; ++y) {
            const float* row = xi + static_cast<int64_t>(y / 2) * W;
            float* orow = o + static_cast<int64_t>(y) * 2 * W;
            for (int x2 = 0; x2 < 2 * W; ++x2) orow[x2] = row[x2 / 2];
        }
    }
}

void upsample2_backward(const float* gout, float* gin, int N, int C, int H, int W) {
    const int64_t in_plane = static_cast<int64_t>(H) * W;
    const int64_t out_plane = in_plane * 4;
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int plane = 0; plane < N * C; ++plane) {
        const float* go = gout + plane * out_plane;
        float* g = gin + plane * in_plane;
        const int W2 = 2 * W;
        for (int y = 0; y < H; ++y)
            for (int x2 = 0; x2 < W; ++x2) {
                const float* g0 = go + static_cast<int64_t>(2 * y) * W2 + 2 * x2;
                const float* g1 = go + static_cast<int64_t>(2 * y + 1) * W2 + 2 * x2;
                g[static_cast<int64_t>(y) * W + x2] = (g0[0] + g0[1]) + (g1[0] + g1[1]);
            }
    }
}

void relu_forward(const float* x, float* out, int64_t n) {
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int64_t i = 0; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* x, const float* gout, float* gin, int64_t n) {
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int64_t i = 0; i < n; ++i) gin[i] = x[i] > 0.0f ? gout[i] : 0.0f;
}

void sigmoid_forward(const float* x, float* out, int64_t n) {
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int64_t i = 0; i < n; ++i)
        out[i] = 1.0f / (1.0f + std::exp(-x[i]));
}

void sigmoid_backward(const float* y, const float* gout, float* gin, int64_t n) {
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int64_t i = 0; i < n; ++i) gin[i] = gout[i] * y[i] * (1.0f - y[i]);
}

double sum(const float* x, int64_t n) {
    return blocked_reduce(n, [x](int64_t lo, int64_t hi) {
        double s = 0.0;
        for (int64_t i = lo; i < hi; ++i) s += x[i];
        return s;
    });
}

double sum_abs(const float* x, int64_t n) {
    return blocked_reduce(n, [x](int64_t lo, int64_t hi) {
        double s = 0.0;
        for (int64_t i = lo; i < hi; ++i) s += std::fabs(x[i]);
        return s;
    });
}

double dot(const float* a, const float* b, int64_t n) {
    return blocked_reduce(n, [a, b](int64_t lo, int64_t hi) {
        double s = 0.0;
        for (int64_t i = lo; i < hi; ++i)
            s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        return s;
    });
}

double sum_abs_diff(const float* a, const float* b, int64_t n) {
    return blocked_reduce(n, [a, b](int64_t lo, int64_t hi) {
        double s = 0.0;
        for (int64_t i = lo; i < hi; ++i) s += std::fabs(static_cast<double>(a[i]) - b[i]);
        return s;
    });
}

double sum_sq_diff(const float* a, const float* b, int64_t n) {
    return blocked_reduce(n, [a, b](int64_t lo, int64_t hi) {
        double s = 0.0;
        for (int64_t i = lo; i < hi; ++i) {
            const double d = static_cast<double>(a[i]) - b[i];
            s += d * d;
        }
        return s;
    });
}

float max_abs_diff(const float* a, const float* b, int64_t n) {
    // max is exactly associative, so a plain OpenMP reduction is fine here
    float m = 0.0f;
    const bool p = par();
#pragma omp parallel for schedule(static) reduction(max : m) if (p)
    for (int64_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

void axpy(float* y, float a, const float* x, int64_t n) {
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(float* x, float a, int64_t n) {
    const bool p = par();
#pragma omp parallel for schedule(static) if (p)
    for (int64_t i = 0; i < n; ++i) x[i] *= a;
}

}  // namespace depthdecode::kernels

namespace depthdecode::ref {

void conv2d_forward(const float* x, const float* w, const float* b, float* out,
                    int N, int Cin, int H, int W, int Cout, int K, int P) {
    const int Ho = H + 2 * P - K + 1;
    const int Wo = W + 2 * P - K + 1;
    auto X = [&](int n, int c, int y, int xx) {
        return x[((static_cast<int64_t>(n) * Cin + c) * H + y) * W + xx];
    };
    for (int n = 0; n < N; ++n)
        for (int co = 0; co < Cout; ++co)
            for (int oy = 0; oy < Ho; ++oy)
                for (int ox = 0; ox < Wo; ++ox) {
                    double s = b[co];
                    for (int ci = 0; ci < Cin; ++ci)
                        for (int ky = 0; ky < K; ++ky)
                            for (int kx = 0; kx < K; ++kx) {
                                const int iy = oy + ky - P;
                                const int ix = ox + kx - P;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                s += static_cast<double>(
                                         w[((static_cast<int64_t>(co) * Cin + ci) * K + ky) * K + kx]) *
                                     X(n, ci, iy, ix);
                            }
                    out[((static_cast<int64_t>(n) * Cout + co) * Ho + oy) * Wo + ox] =
                        static_cast<float>(s);
                }
}

void conv2d_backward_input(const float* gout, const float* w, float* gin,
                           int N, int Cin, int H, int W, int Cout, int K, int P) {
    const int Ho = H + 2 * P - K + 1;
    const int Wo = W + 2 * P - K + 1;
    for (int64_t i = 0; i < static_cast<int64_t>(N) * Cin * H * W; ++i) gin[i] = 0.0f;
    for (int n = 0; n < N; ++n)
        for (int co = 0; co < Cout; ++co)
            for (int oy = 0; oy < Ho; ++oy)
                for (int ox = 0; ox < Wo; ++ox) {
                    const float g =
                        gout[((static_cast<int64_t>(n) * Cout + co) * Ho + oy) * Wo + ox];
                    for (int ci = 0; ci < Cin; ++ci)
                        for (int ky = 0; ky < K; ++ky)
                            for (int kx = 0; kx < K; ++kx) {
                                const int iy = oy + ky - P;
                                const int ix = ox + kx - P;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                gin[((static_cast<int64_t>(n) * Cin + ci) * H + iy) * W + ix] +=
                                    g * w[((static_cast<int64_t>(co) * Cin + ci) * K + ky) * K + kx];
                            }
                }
}

void conv2d_backward_params(const float* x, const float* gout, float* gw, float* gb,
                            int N, int Cin, int H, int W, int Cout, int K, int P) {
    const int Ho = H + 2 * P - K + 1;
    const int Wo = W + 2 * P - K + 1;
    std::vector<double> wacc(static_cast<size_t>(Cout) * Cin * K * K, 0.0);
    std::vector<double> bacc(static_cast<size_t>(Cout), 0.0);
    for (int n = 0; n < N; ++n)
        for (int co = 0; co < Cout; ++co)
            for (int oy = 0; oy < Ho; ++oy)
                for (int ox = 0; ox < Wo; ++ox) {
                    const float g =
                        gout[((static_cast<int64_t>(n) * Cout + co) * Ho + oy) * Wo + ox];
                    bacc[static_cast<size_t>(co)] += g;
                    for (int ci = 0; ci < Cin; ++ci)
                        for (int ky = 0; ky < K; ++ky)
                            for (int kx = 0; kx < K; ++kx) {
                                const int iy = oy + ky - P;
                                const int ix = ox + kx - P;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                wacc[((static_cast<size_t>(co) * Cin + ci) * K + ky) * K + kx] +=
                                    static_cast<double>(g) *
                                    x[((static_cast<int64_t>(n) * Cin + ci) * H + iy) * W + ix];
                            }
                }
    for (size_t i = 0; i < wacc.size(); ++i) gw[i] = static_cast<float>(wacc[i]);
    for (int co = 0; co < Cout; ++co) gb[co] = static_cast<float>(bacc[static_cast<size_t>(co)]);
}

void linear_forward(const float* x, const float* w, const float* b, float* out,
                    int N, int I, int O) {
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o) {
            double s = b[o];
            for (int i = 0; i < I; ++i)
                s += static_cast<double>(x[static_cast<int64_t>(n) * I + i]) *
                     w[static_cast<int64_t>(o) * I + i];
            out[static_cast<int64_t>(n) * O + o] = static_cast<float>(s);
        }
}

void linear_backward_input(const float* gout, const float* w, float* gin,
                           int N, int I, int O) {
    for (int n = 0; n < N; ++n)
        for (int i = 0; i < I; ++i) {
            double s = 0.0;
            for (int o = 0; o < O; ++o)
                s += static_cast<double>(gout[static_cast<int64_t>(n) * O + o]) *
                     w[static_cast<int64_t>(o) * I + i];
            gin[static_cast<int64_t>(n) * I + i] = static_cast<float>(s);
        }
}

void linear_backward_params(const float* x, const float* gout, float* gw, float* gb,
                            int N, int I, int O) {
    for (int o = 0; o < O; ++o) {
        double bs = 0.0;
        for (int n = 0; n < N; ++n) bs += gout[static_cast<int64_t>(n) * O + o];
        gb[o] = static_cast<float>(bs);
        for (int i = 0; i < I; ++i) {
            double s = 0.0;
            for (int n = 0; n < N; ++n)
                s += static_cast<double>(gout[static_cast<int64_t>(n) * O + o]) *
                     x[static_cast<int64_t>(n) * I + i];
            gw[static_cast<int64_t>(o) * I + i] = static_cast<float>(s);
        }
    }
}

void maxpool2_forward(const float* x, float* out, int32_t* argmax,
                      int N, int C, int H, int W) {
    const int oh = H / 2, ow = W / 2;
    for (int plane = 0; plane < N * C; ++plane) {
        const float* xi = x + static_cast<int64_t>(plane) * H * W;
        float* o = out + static_cast<int64_t>(plane) * oh * ow;
        int32_t* am = argmax + static_cast<int64_t>(plane) * oh * ow;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                int best = -1;
                float bv = -std::numeric_limits<float>::infinity();
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const int idx = (2 * oy + dy) * W + 2 * ox + dx;
                        if (xi[idx] > bv) {
                            bv = xi[idx];
                            best = idx;
                        }
                    }
                o[oy * ow + ox] = bv;
                am[oy * ow + ox] = best;
            }
    }
}

void maxpool2_backward(const float* gout, const int32_t* argmax, float* gin,
                       int N, int C, int H, int W) {
    const int oh = H / 2, ow = W / 2;
    for (int64_t i = 0; i < static_cast<int64_t>(N) * C * H * W; ++i) gin[i] = 0.0f;
    for (int plane = 0; plane < N * C; ++plane) {
        const float* go = gout + static_cast<int64_t>(plane) * oh * ow;
        const int32_t* am = argmax + static_cast<int64_t>(plane) * oh * ow;
        float* g = gin + static_cast<int64_t>(plane) * H * W;
        for (int i = 0; i < oh * ow; ++i) g[am[i]] += go[i];
    }
}

void avgpool_forward(const float* x, float* out,
                     int N, int C, int H, int W, int oh, int ow) {
    const int wh = H / oh, ww = W / ow;
    for (int plane = 0; plane < N * C; ++plane) {
        const float* xi = x + static_cast<int64_t>(plane) * H * W;
        float* o = out + static_cast<int64_t>(plane) * oh * ow;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double s = 0.0;
                for (int dy = 0; dy < wh; ++dy)
                    for (int dx = 0; dx < ww; ++dx)
                        s += xi[(oy * wh + dy) * W + ox * ww + dx];
                o[oy * ow + ox] = static_cast<float>(s / (wh * ww));
            }
    }
}

void avgpool_backward(const float* gout, float* gin,
                      int N, int C, int H, int W, int oh, int ow) {
    const int wh = H / oh, ww = W / ow;
    for (int plane = 0; plane < N * C; ++plane) {
        const float* go = gout + static_cast<int64_t>(plane) * oh * ow;
        float* g = gin + static_cast<int64_t>(plane) * H * W;
        for (int y = 0; y < H; ++y)
            for (int x2 = 0; x2 < W; ++x2)
                g[y * W + x2] = go[(y / wh) * ow + (x2 / ww)] / static_cast<float>(wh * ww);
    }
}

void upsample2_forward(const float* x, float* out, int N, int C, int H, int W) {
    for (int plane = 0; plane < N * C; ++plane)
        for (int y = 0; y < 2 * H; ++y)
            for (int x2 = 0; x2 < 2 * W; ++x2)
                out[(static_cast<int64_t>(plane) * 2 * H + y) * 2 * W + x2] =
                    x[(static_cast<int64_t>(plane) * H + y / 2) * W + x2 / 2];
}

void upsample2_backward(const float* gout, float* gin, int N, int C, int H, int W) {
    for (int64_t i = 0; i < static_cast<int64_t>(N) * C * H * W; ++i) gin[i] = 0.0f;
    for (int plane = 0; plane < N * C; ++plane)
        for (int y = 0; y < 2 * H; ++y)
            for (int x2 = 0; x2 < 2 * W; ++x2)
                gin[(static_cast<int64_t>(plane) * H + y / 2) * W + x2 / 2] +=
                    gout[(static_cast<int64_t>(plane) * 2 * H + y) * 2 * W + x2];
}

double sum(const float* x, int64_t n) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double dot(const float* a, const float* b, int64_t n) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

}  // namespace depthdecode::ref
