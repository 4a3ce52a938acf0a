#include <benchmark/benchmark.h>

#include "edgenet/augment.hpp"
#include "edgenet/layers.hpp"
#include "edgenet/model.hpp"
#include "edgenet/optimizer.hpp"
#include "edgenet/rng.hpp"
#include "edgenet/vision.hpp"

namespace {

using namespace edgenet;

TensorF random_tensor(std::vector<int> shape, uint64_t seed) {
    Tensor<float> t(std::move(shape));
    Rng rng(seed);
    for (int64_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
    }
    return t;
}

Image random_image(int h, int w, uint64_t seed) {
    Image img(h, w);
    Rng rng(seed);
    for (auto& p : img.pixels) p = static_cast<float>(rng.uniform01());
    return img;
}

void bm_conv2d_forward(benchmark::State& state) {
    ConvSpec spec;
    spec.in_channels = 32;
    spec.out_channels = 32;
    const TensorF x = random_tensor({32, 28, 28}, 1);
    const TensorF w = random_tensor({32, 32, 3, 3}, 2);
    const TensorF b = random_tensor({32}, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv2d_forward(x, w, b, spec));
    }
}
BENCHMARK(bm_conv2d_forward);

void bm_conv2d_backward(benchmark::State& state) {
    ConvSpec spec;
    spec.in_channels = 32;
    spec.out_channels = 32;
    const TensorF x = random_tensor({32, 28, 28}, 1);
    const TensorF w = random_tensor({32, 32, 3, 3}, 2);
    const TensorF gy = random_tensor({32, 28, 28}, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv2d_backward(x, w, gy, spec));
    }
}
BENCHMARK(bm_conv2d_backward);

void bm_model_forward_backward(benchmark::State& state) {
    const ModelGraph g = build(Variant::edgenet);
    const auto w = init_weights<float>(g, 7);
    const Image img = random_image(28, 28, 11);
    const auto pair = make_input_pair<float>(img, Variant::edgenet, default_edge_params(EdgeMethod::canny));
    for (auto _ : state) {
        ForwardContext<float> ctx;
        TensorF probs = forward(g, w, pair.image, pair.edge, true, 99, &ctx);
        auto ce = cross_entropy(probs, 3);
        benchmark::DoNotOptimize(backward(g, w, ctx, ce.dlogits));
    }
}
BENCHMARK(bm_model_forward_backward);

void bm_gaussian_blur5(benchmark::State& state) {
    const Image img = random_image(28, 28, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gaussian_blur5(img));
    }
}
BENCHMARK(bm_gaussian_blur5);

void bm_canny(benchmark::State& state) {
    const Image img = random_image(28, 28, 5);
    const EdgeParams p = default_edge_params(EdgeMethod::canny);
    for (auto _ : state) {
        benchmark::DoNotOptimize(canny(img, p));
    }
}
BENCHMARK(bm_canny);

void bm_rotate(benchmark::State& state) {
    const Image img = random_image(28, 28, 6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rotate(img, 17.0));
    }
}
BENCHMARK(bm_rotate);

void bm_adadelta_step(benchmark::State& state) {
    TensorF p = random_tensor({128, 6272}, 21);
    const TensorF g = random_tensor({128, 6272}, 22);
    TensorF eg({128, 6272});
    TensorF ex({128, 6272});
    const AdadeltaConfig cfg;
    for (auto _ : state) {
        adadelta_step(p, g, eg, ex, cfg, "bench.weight");
        benchmark::DoNotOptimize(p.data());
    }
}
BENCHMARK(bm_adadelta_step);

}  // namespace

BENCHMARK_MAIN();
