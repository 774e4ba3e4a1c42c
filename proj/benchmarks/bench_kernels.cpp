// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0
//
// Compares the textbook reference kernels against the optimised ones with the
// serial and OpenMP backends. Run with --benchmark_filter=conv to narrow.

#include <benchmark/benchmark.h>

#include <vector>

#include "depthdecode/kernels.hpp"
#include "depthdecode/rng.hpp"

namespace k = depthdecode::kernels;
namespace ref = depthdecode::ref;
using depthdecode::Rng;

namespace {

struct ConvInputs {
    int N = 4, Cin = 32, H = 28, W = 28, Cout = 64, K = 3, P = 1;
    std::vector<float> x, w, b, out, gout, gin, gw, gb;
    ConvInputs() {
        Rng r(1234);
        auto fill = [&](std::vector<float>& v, int64_t n) {
            v.resize(static_cast<size_t>(n));
            for (auto& e : v) e = static_cast<float>(r.normal());
        };
        fill(x, static_cast<int64_t>(N) * Cin * H * W);
        fill(w, static_cast<int64_t>(Cout) * Cin * K * K);
        fill(b, Cout);
        fill(gout, static_cast<int64_t>(N) * Cout * H * W);
        out.resize(gout.size());
        gin.resize(x.size());
        gw.resize(w.size());
        gb.resize(b.size());
    }
};

ConvInputs& inputs() {
    static ConvInputs ci;
    return ci;
}

double conv_items(const ConvInputs& c) {
    return static_cast<double>(c.N) * c.Cout * c.H * c.W * c.Cin * c.K * c.K;
}

}  // namespace

static void BM_conv_forward_ref(benchmark::State& state) {
    auto& c = inputs();
    for (auto _ : state) {
        ref::conv2d_forward(c.x.data(), c.w.data(), c.b.data(), c.out.data(), c.N, c.Cin,
                            c.H, c.W, c.Cout, c.K, c.P);
        benchmark::DoNotOptimize(c.out.data());
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * conv_items(c)));
}
BENCHMARK(BM_conv_forward_ref)->Unit(benchmark::kMillisecond);

static void BM_conv_forward_serial(benchmark::State& state) {
    auto& c = inputs();
    k::set_backend(k::Backend::Serial);
    for (auto _ : state) {
        k::conv2d_forward(c.x.data(), c.w.data(), c.b.data(), c.out.data(), c.N, c.Cin,
                          c.H, c.W, c.Cout, c.K, c.P);
        benchmark::DoNotOptimize(c.out.data());
    }
    k::set_backend(k::Backend::OpenMP);
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * conv_items(c)));
}
BENCHMARK(BM_conv_forward_serial)->Unit(benchmark::kMillisecond);

static void BM_conv_forward_omp(benchmark::State& state) {
    auto& c = inputs();
    k::set_backend(k::Backend::OpenMP);
    for (auto _ : state) {
        k::conv2d_forward(c.x.data(), c.w.data(), c.b.data(), c.out.data(), c.N, c.Cin,
                          c.H, c.W, c.Cout, c.K, c.P);
        benchmark::DoNotOptimize(c.out.data());
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * conv_items(c)));
}
BENCHMARK(BM_conv_forward_omp)->Unit(benchmark::kMillisecond);

static void BM_conv_backward_input_ref(benchmark::State& state) {
    auto& c = inputs();
    for (auto _ : state) {
        ref::conv2d_backward_input(c.gout.data(), c.w.data(), c.gin.data(), c.N, c.Cin,
                                   c.H, c.W, c.Cout, c.K, c.P);
        benchmark::DoNotOptimize(c.gin.data());
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * conv_items(c)));
}
BENCHMARK(BM_conv_backward_input_ref)->Unit(benchmark::kMillisecond);

static void BM_conv_backward_input_omp(benchmark::State& state) {
    auto& c = inputs();
    k::set_backend(k::Backend::OpenMP);
    for (auto _ : state) {
        k::conv2d_backward_input(c.gout.data(), c.w.data(), c.gin.data(), c.N, c.Cin,
                                 c.H, c.W, c.Cout, c.K, c.P);
        benchmark::DoNotOptimize(c.gin.data());
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * conv_items(c)));
}
BENCHMARK(BM_conv_backward_input_omp)->Unit(benchmark::kMillisecond);

static void BM_conv_backward_params_ref(benchmark::State& state) {
    auto& c = inputs();
    for (auto _ : state) {
        ref::conv2d_backward_params(c.x.data(), c.gout.data(), c.gw.data(), c.gb.data(),
                                    c.N, c.Cin, c.H, c.W, c.Cout, c.K, c.P);
        benchmark::DoNotOptimize(c.gw.data());
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * conv_items(c)));
}
BENCHMARK(BM_conv_backward_params_ref)->Unit(benchmark::kMillisecond);

static void BM_conv_backward_params_omp(benchmark::State& state) {
    auto& c = inputs();
    k::set_backend(k::Backend::OpenMP);
    for (auto _ : state) {
        k::conv2d_backward_params(c.x.data(), c.gout.data(), c.gw.data(), c.gb.data(),
                                  c.N, c.Cin, c.H, c.W, c.Cout, c.K, c.P);
        benchmark::DoNotOptimize(c.gw.data());
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * conv_items(c)));
}
BENCHMARK(BM_conv_backward_params_omp)->Unit(benchmark::kMillisecond);

static void BM_linear_forward_omp(benchmark::State& state) {
    const int N = 16, I = 3136, O = 512;
    Rng r(77);
    std::vector<float> x(static_cast<size_t>(N) * I), w(static_cast<size_t>(O) * I),
        b(O), out(static_cast<size_t>(N) * O);
    for (auto& e : x) e = static_cast<float>(r.normal());
    for (auto& e : w) e = static_cast<float>(r.normal());
    for (auto _ : state) {
        k::linear_forward(x.data(), w.data(), b.data(), out.data(), N, I, O);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(N) * I * O);
}
BENCHMARK(BM_linear_forward_omp)->Unit(benchmark::kMillisecond);

static void BM_reduction_dot(benchmark::State& state) {
    const int64_t n = 1 << 20;
    Rng r(99);
    std::vector<float> a(static_cast<size_t>(n)), b(static_cast<size_t>(n));
    for (auto& e : a) e = static_cast<float>(r.normal());
    for (auto& e : b) e = static_cast<float>(r.normal());
    for (auto _ : state) {
        double d = k::dot(a.data(), b.data(), n);
        benchmark::DoNotOptimize(d);
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_reduction_dot)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
