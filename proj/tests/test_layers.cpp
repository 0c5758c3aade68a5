#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/gradcheck.hpp"
#include "ternconv/block.hpp"
#include "ternconv/layers.hpp"
#include "ternconv/rng.hpp"

using namespace ternconv;

namespace {

Tensor<double> random_tensor(SplitMixStream& rng, int b, int c, int t) {
  Tensor<double> x(b, c, t);
  gradcheck::fill_uniform(x, rng);
  return x;
}

std::vector<double> random_cotangent(SplitMixStream& rng, std::size_t n) {
  std::vector<double> r(n);
  for (auto& v : r) v = rng.next_uniform();
  return r;
}

Tensor<double> as_tensor(const std::vector<double>& v, int b, int c, int t) {
  Tensor<double> out(b, c, t);
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

}  // namespace

TEST_CASE("depthwise identity kernels") {
  SplitMixStream rng(1);
  Tensor<double> x = random_tensor(rng, 2, 3, 10);

  DepthwiseConv<double> k1("dw", 3, 1);
  std::fill(k1.weights().begin(), k1.weights().end(), 1.0);
  REQUIRE(k1.forward(x).values() == x.values());

  DepthwiseConv<double> k3("dw", 3, 3);
  for (int c = 0; c < 3; ++c) {
    k3.weights()[c * 3 + 0] = 0.0;
    k3.weights()[c * 3 + 1] = 1.0;
    k3.weights()[c * 3 + 2] = 0.0;
  }
  REQUIRE(k3.forward(x).values() == x.values());
}

TEST_CASE("depthwise matches a brute-force convolution oracle") {
  SplitMixStream rng(2);
  const int B = 2, C = 4, T = 12, K = 5, P = (K - 1) / 2;
  DepthwiseConv<double> dw("dw", C, K);
  for (auto& w : dw.weights()) w = rng.next_uniform();
  Tensor<double> x = random_tensor(rng, B, C, T);
  const Tensor<double> y = dw.forward(x);
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      for (int t = 0; t < T; ++t) {
        double want = 0.0;
        for (int k = 0; k < K; ++k) {
          const int src = t + k - P;
          if (src >= 0 && src < T) want += dw.weights()[c * K + k] * x.at(b, c, src);
        }
        REQUIRE(std::abs(y.at(b, c, t) - want) < 1e-6);
      }
    }
  }
}

TEST_CASE("depthwise backward") {
  SplitMixStream rng(3);
  const int B = 2, C = 3, T = 9, K = 3;

  SECTION("zero upstream gradient") {
    DepthwiseConv<double> dw("dw", C, K);
    for (auto& w : dw.weights()) w = rng.next_uniform();
    Tensor<double> x = random_tensor(rng, B, C, T);
    dw.forward(x);
    const Tensor<double> dx = dw.backward(Tensor<double>(B, C, T));
    for (double v : dx.values()) REQUIRE(v == 0.0);
    std::vector<ParamRef<double>> params;
    dw.collect_params(params);
    for (double g : *params[0].grad) REQUIRE(g == 0.0);
  }

  SECTION("K=1 backward is a per-channel scaling") {
    DepthwiseConv<double> dw("dw", C, 1);
    for (int c = 0; c < C; ++c) dw.weights()[c] = 0.5 + c;
    Tensor<double> x = random_tensor(rng, B, C, T);
    dw.forward(x);
    Tensor<double> dy = random_tensor(rng, B, C, T);
    const Tensor<double> dx = dw.backward(dy);
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c)
        for (int t = 0; t < T; ++t)
          REQUIRE(dx.at(b, c, t) == dw.weights()[c] * dy.at(b, c, t));
  }

  SECTION("finite differences") {
    DepthwiseConv<double> dw("dw", C, K);
    for (auto& w : dw.weights()) w = rng.next_uniform();
    Tensor<double> x = random_tensor(rng, B, C, T);
    const std::vector<double> r = random_cotangent(rng, x.size());

    auto loss = [&]() { return gradcheck::weighted_sum(dw.forward(x), r); };
    loss();
    std::vector<ParamRef<double>> params;
    dw.collect_params(params);
    std::fill(params[0].grad->begin(), params[0].grad->end(), 0.0);
    const Tensor<double> dx = dw.backward(as_tensor(r, B, C, T));

    std::vector<gradcheck::Failure> failures;
    REQUIRE(gradcheck::check_param(dw.weights(), *params[0].grad, loss, "dw.weight", failures));
    auto input_loss = [&]() { return gradcheck::weighted_sum(dw.forward(x), r); };
    REQUIRE(gradcheck::check_param(x.values(), dx.values(), input_loss, "dw.input", failures));
  }
}

TEST_CASE("batchnorm forward") {
  SECTION("constant input per channel normalizes to zero") {
    BatchNorm<double> bn("bn", 2);
    Tensor<double> x(2, 2, 4);
    for (int b = 0; b < 2; ++b)
      for (int t = 0; t < 4; ++t) {
        x.at(b, 0, t) = 3.5;
        x.at(b, 1, t) = -1.25;
      }
    const Tensor<double> y = bn.forward(x, true);
    for (double v : y.values()) REQUIRE(v == 0.0);
  }

  SECTION("gamma=0 outputs beta everywhere") {
    BatchNorm<double> bn("bn", 3);
    std::fill(bn.gamma().begin(), bn.gamma().end(), 0.0);
    bn.beta() = {1.0, -2.0, 0.5};
    SplitMixStream rng(4);
    Tensor<double> x = random_tensor(rng, 2, 3, 5);
    const Tensor<double> y = bn.forward(x, true);
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 3; ++c)
        for (int t = 0; t < 5; ++t) REQUIRE(y.at(b, c, t) == bn.beta()[c]);
  }

  SECTION("training-mode output moments match gamma and beta") {
    const int B = 4, C = 3, T = 256;
    BatchNorm<double> bn("bn", C);
    bn.gamma() = {1.5, 0.75, 2.0};
    bn.beta() = {0.25, -1.0, 3.0};
    SplitMixStream rng(5);
    Tensor<double> x = random_tensor(rng, B, C, T);
    const Tensor<double> y = bn.forward(x, true);
    const double n = B * T;
    for (int c = 0; c < C; ++c) {
      double mean = 0.0, var = 0.0;
      for (int b = 0; b < B; ++b)
        for (int t = 0; t < T; ++t) mean += y.at(b, c, t);
      mean /= n;
      for (int b = 0; b < B; ++b)
        for (int t = 0; t < T; ++t) {
          const double d = y.at(b, c, t) - mean;
          var += d * d;
        }
      var /= n;
      REQUIRE(std::abs(mean - bn.beta()[c]) < 1e-5);
      REQUIRE(std::abs(var - bn.gamma()[c] * bn.gamma()[c]) /
                  (bn.gamma()[c] * bn.gamma()[c]) <
              1e-3);
    }
  }

  SECTION("rejects degenerate training batches and channel mismatch") {
    BatchNorm<double> bn("bn", 2);
    Tensor<double> tiny(1, 2, 1);
    REQUIRE_THROWS_AS(bn.forward(tiny, true), std::invalid_argument);
    REQUIRE_NOTHROW(bn.forward(tiny, false));
    Tensor<double> wrong(1, 3, 4);
    REQUIRE_THROWS_AS(bn.forward(wrong, true), std::invalid_argument);
  }
}

TEST_CASE("batchnorm backward") {
  SplitMixStream rng(6);
  const int B = 2, C = 3, T = 8;

  SECTION("zero upstream gradient zeroes everything") {
    BatchNorm<double> bn("bn", C);
    Tensor<double> x = random_tensor(rng, B, C, T);
    bn.forward(x, true);
    const Tensor<double> dx = bn.backward(Tensor<double>(B, C, T));
    for (double v : dx.values()) REQUIRE(v == 0.0);
  }

  SECTION("gamma gradient is the dY.xhat reduction") {
    BatchNorm<double> bn("bn", C);
    Tensor<double> x = random_tensor(rng, B, C, T);
    const Tensor<double> y = bn.forward(x, true);  // gamma=1, beta=0: y == xhat
    Tensor<double> dy = random_tensor(rng, B, C, T);
    bn.backward(dy);
    std::vector<ParamRef<double>> params;
    bn.collect_params(params);
    for (int c = 0; c < C; ++c) {
      double want = 0.0;
      for (int b = 0; b < B; ++b)
        for (int t = 0; t < T; ++t) want += dy.at(b, c, t) * y.at(b, c, t);
      REQUIRE(std::abs((*params[0].grad)[c] - want) < 1e-9);
    }
  }

  SECTION("finite differences on gamma, beta, and the input") {
    BatchNorm<double> bn("bn", C);
    for (auto& g : bn.gamma()) g = 0.5 + rng.next_unit();
    for (auto& b : bn.beta()) b = rng.next_uniform();
    Tensor<double> x = random_tensor(rng, B, C, T);
    const std::vector<double> r = random_cotangent(rng, x.size());
    auto loss = [&]() { return gradcheck::weighted_sum(bn.forward(x, true), r); };
    loss();
    std::vector<ParamRef<double>> params;
    bn.collect_params(params);
    std::fill(params[0].grad->begin(), params[0].grad->end(), 0.0);
    std::fill(params[1].grad->begin(), params[1].grad->end(), 0.0);
    const Tensor<double> dx = bn.backward(as_tensor(r, B, C, T));

    std::vector<gradcheck::Failure> failures;
    REQUIRE(gradcheck::check_param(bn.gamma(), *params[0].grad, loss, "bn.gamma", failures));
    REQUIRE(gradcheck::check_param(bn.beta(), *params[1].grad, loss, "bn.beta", failures));
    REQUIRE(gradcheck::check_param(x.values(), dx.values(), loss, "bn.input", failures));
  }
}

TEST_CASE("relu") {
  Relu<double> relu("relu");
  SECTION("all-negative input blocks both directions") {
    Tensor<double> x(1, 2, 3);
    for (auto& v : x.values()) v = -1.0;
    const Tensor<double> y = relu.forward(x);
    for (double v : y.values()) REQUIRE(v == 0.0);
    Tensor<double> dy(1, 2, 3);
    for (auto& v : dy.values()) v = 5.0;
    const Tensor<double> dx = relu.backward(dy);
    for (double v : dx.values()) REQUIRE(v == 0.0);
  }
  SECTION("all-positive input is the identity both directions") {
    SplitMixStream rng(7);
    Tensor<double> x(2, 2, 4);
    for (auto& v : x.values()) v = 0.5 + rng.next_unit();
    REQUIRE(relu.forward(x).values() == x.values());
    Tensor<double> dy = random_tensor(rng, 2, 2, 4);
    REQUIRE(relu.backward(dy).values() == dy.values());
  }
  SECTION("finite differences away from the kink") {
    SplitMixStream rng(8);
    Tensor<double> x(1, 4, 8);
    for (auto& v : x.values()) {
      do {
        v = rng.next_uniform();
      } while (std::abs(v) <= 1e-2);
    }
    const std::vector<double> r = random_cotangent(rng, x.size());
    auto loss = [&]() { return gradcheck::weighted_sum(relu.forward(x), r); };
    loss();
    const Tensor<double> dx = relu.backward(as_tensor(r, 1, 4, 8));
    std::vector<gradcheck::Failure> failures;
    REQUIRE(gradcheck::check_param(x.values(), dx.values(), loss, "relu.input", failures));
  }
}

TEST_CASE("pointwise layer") {
  SplitMixStream rng(9);
  SECTION("trainable float finite differences") {
    PointwiseLayer<double> pw("pw", 5, 4);
    for (auto& w : pw.weights()) w = rng.next_uniform();
    Tensor<double> x = random_tensor(rng, 2, 4, 6);
    const std::vector<double> r = random_cotangent(rng, 2 * 5 * 6);
    auto loss = [&]() { return gradcheck::weighted_sum(pw.forward(x), r); };
    loss();
    std::vector<ParamRef<double>> params;
    pw.collect_params(params);
    REQUIRE(params.size() == 1);
    std::fill(params[0].grad->begin(), params[0].grad->end(), 0.0);
    const Tensor<double> dx = pw.backward(as_tensor(r, 2, 5, 6));
    std::vector<gradcheck::Failure> failures;
    REQUIRE(gradcheck::check_param(pw.weights(), *params[0].grad, loss, "pw.weight", failures));
    REQUIRE(gradcheck::check_param(x.values(), dx.values(), loss, "pw.input", failures));
  }

  SECTION("frozen ternary exposes no parameters and multiplies nothing") {
    WeightSpec spec{.seed = 21, .layer_tag = 3, .rows = 6, .cols = 6, .threshold = 0.4};
    PointwiseLayer<double> pw("pw", spec);
    std::vector<ParamRef<double>> params;
    pw.collect_params(params);
    REQUIRE(params.empty());

    Tensor<double> x = random_tensor(rng, 2, 6, 5);
    const Tensor<double> y = pw.forward(x);
    pw.backward(y);
    REQUIRE(pw.counter().multiplications == 0);
  }

  SECTION("frozen ternary input gradient matches finite differences") {
    WeightSpec spec{.seed = 22, .layer_tag = 0, .rows = 4, .cols = 4, .threshold = 0.3};
    PointwiseLayer<double> pw("pw", spec);
    Tensor<double> x = random_tensor(rng, 1, 4, 5);
    const std::vector<double> r = random_cotangent(rng, x.size());
    auto loss = [&]() { return gradcheck::weighted_sum(pw.forward(x), r); };
    loss();
    const Tensor<double> dx = pw.backward(as_tensor(r, 1, 4, 5));
    std::vector<gradcheck::Failure> failures;
    REQUIRE(gradcheck::check_param(x.values(), dx.values(), loss, "frozen.input", failures));
  }
}

namespace {

void init_block(ResidualBlock<double>& block, SplitMixStream& rng) {
  for (int j = 0; j < block.reps(); ++j) {
    for (auto& w : block.dw(j).weights()) w = rng.next_uniform();
    if (!block.pw(j).frozen())
      for (auto& w : block.pw(j).weights()) w = rng.next_uniform() * 0.5;
    for (auto& g : block.bn(j).gamma()) g = 0.75 + 0.5 * rng.next_unit();
    for (auto& b : block.bn(j).beta()) b = 0.25 * rng.next_uniform();
  }
  if (block.skip_proj() && !block.skip_proj()->frozen())
    for (auto& w : block.skip_proj()->weights()) w = rng.next_uniform() * 0.5;
  if (block.skip_bn())
    for (auto& g : block.skip_bn()->gamma()) g = 0.75 + 0.5 * rng.next_unit();
}

}  // namespace

TEST_CASE("block forward compositions") {
  SECTION("all-identity main path with identity skip doubles the input") {
    // float pointwise set to the identity matrix; BN in inference mode with
    // fresh running stats (0, 1)
    const int C = 4, T = 6;
    ResidualBlock<double> block("b", C, 1, 3, PointwiseMode::TrainableFloat,
                                SkipMode::Identity, TernaryParams{}, 1);
    for (int c = 0; c < C; ++c) {
      block.dw(0).weights()[c * 3 + 1] = 1.0;  // centered tap
      block.pw(0).weights()[c * C + c] = 1.0;  // identity mix
    }
    SplitMixStream rng(10);
    Tensor<double> x = random_tensor(rng, 2, C, T);
    const Tensor<double> y = block.forward(x, false);
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < C; ++c)
        for (int t = 0; t < T; ++t) {
          const double want = std::max(0.0, 2.0 * x.at(b, c, t));
          REQUIRE(std::abs(y.at(b, c, t) - want) <= 1e-4 * std::abs(want) + 1e-12);
        }
  }

  SECTION("zero ternary matrices with no skip give a zero block") {
    TernaryParams tern{.seed = 5, .threshold = 1.0};
    ResidualBlock<double> block("b", 4, 1, 3, PointwiseMode::FrozenTernary,
                                SkipMode::None, tern, 1);
    SplitMixStream rng(11);
    for (auto& w : block.dw(0).weights()) w = rng.next_uniform();
    Tensor<double> x = random_tensor(rng, 2, 4, 6);
    const Tensor<double> y = block.forward(x, true);
    for (double v : y.values()) REQUIRE(v == 0.0);
  }
}

TEST_CASE("block gradients for every skip and pointwise mode") {
  const int C = 8, T = 16, M = 2, B = 2;
  const TernaryParams tern{.seed = 33, .threshold = 0.5};
  int cfg_index = 0;
  for (SkipMode skip : {SkipMode::TrainedFloat, SkipMode::RandomTernary,
                        SkipMode::Identity, SkipMode::None}) {
    for (PointwiseMode pw : {PointwiseMode::TrainableFloat, PointwiseMode::FrozenTernary}) {
      DYNAMIC_SECTION("skip=" << to_string(skip) << " pw=" << to_string(pw)) {
        SplitMixStream rng(1000 * (cfg_index + 1));
        ResidualBlock<double> block("b", C, M, 3, pw, skip, tern, 1);
        init_block(block, rng);
        Tensor<double> x = random_tensor(rng, B, C, T);
        const std::vector<double> r = random_cotangent(rng, x.size());

        auto loss = [&]() { return gradcheck::weighted_sum(block.forward(x, true), r); };
        auto kinks = [&]() {
          std::vector<signed char> signs;
          for (int j = 0; j + 1 < M; ++j)
            gradcheck::append_signs(block.inner_relu(j).cached_input(), signs);
          gradcheck::append_signs(block.final_relu().cached_input(), signs);
          return signs;
        };
        loss();
        std::vector<ParamRef<double>> params;
        block.collect_params(params);
        for (auto& p : params) std::fill(p.grad->begin(), p.grad->end(), 0.0);
        const Tensor<double> dx = block.backward(as_tensor(r, B, C, T));

        std::vector<gradcheck::Failure> failures;
        gradcheck::CheckStats stats;
        for (auto& p : params) {
          INFO("param " << p.name);
          REQUIRE(gradcheck::check_param(*p.value, *p.grad, loss, p.name, failures, &stats,
                                         kinks));
        }
        REQUIRE(gradcheck::check_param(x.values(), dx.values(), loss, "input", failures,
                                       &stats, kinks));
        // the kink filter must not hollow out the check
        REQUIRE(stats.checked > 9 * stats.skipped);
      }
      ++cfg_index;
    }
  }
}

TEST_CASE("block backward bookkeeping") {
  const TernaryParams tern{.seed = 44, .threshold = 0.5};
  SplitMixStream rng(12);

  SECTION("zero upstream gradient produces zero parameter gradients") {
    ResidualBlock<double> block("b", 4, 2, 3, PointwiseMode::TrainableFloat,
                                SkipMode::TrainedFloat, tern, 1);
    init_block(block, rng);
    Tensor<double> x = random_tensor(rng, 2, 4, 8);
    block.forward(x, true);
    const Tensor<double> dx = block.backward(Tensor<double>(2, 4, 8));
    for (double v : dx.values()) REQUIRE(v == 0.0);
    std::vector<ParamRef<double>> params;
    block.collect_params(params);
    for (auto& p : params)
      for (double g : *p.grad) REQUIRE(g == 0.0);
  }

  SECTION("frozen pointwise never appears in the parameter set") {
    ResidualBlock<double> block("b", 4, 2, 3, PointwiseMode::FrozenTernary,
                                SkipMode::RandomTernary, tern, 1);
    std::vector<ParamRef<double>> params;
    block.collect_params(params);
    for (const auto& p : params) {
      REQUIRE(p.name.find(".pw") == std::string::npos);
      REQUIRE(p.name.find(".skip.") == std::string::npos);
      REQUIRE(p.name != "b.skip.weight");
    }
    // the trainable set is exactly: dw x2, bn x2 (two refs each), skip_bn
    REQUIRE(params.size() == 2 + 2 * 2 + 2);
  }

  SECTION("forward+backward through frozen layers records zero multiplications") {
    ResidualBlock<double> block("b", 6, 1, 3, PointwiseMode::FrozenTernary,
                                SkipMode::RandomTernary, tern, 1);
    init_block(block, rng);
    Tensor<double> x = random_tensor(rng, 2, 6, 8);
    const Tensor<double> y = block.forward(x, true);
    block.backward(y);
    REQUIRE(block.pw(0).counter().multiplications == 0);
    REQUIRE(block.skip_proj()->counter().multiplications == 0);
  }

  SECTION("identity skip saves exactly C*C floats over a trained skip") {
    auto trainable_count = [](ResidualBlock<double>& blk) {
      std::vector<ParamRef<double>> params;
      blk.collect_params(params);
      std::size_t total = 0;
      for (auto& p : params) total += p.value->size();
      return total;
    };
    ResidualBlock<double> trained("b", 8, 1, 3, PointwiseMode::TrainableFloat,
                                  SkipMode::TrainedFloat, tern, 1);
    ResidualBlock<double> identity("b", 8, 1, 3, PointwiseMode::TrainableFloat,
                                   SkipMode::Identity, tern, 1);
    // the trained skip also carries its own BN (2*C more trainables)
    REQUIRE(trainable_count(trained) - trainable_count(identity) == 8 * 8 + 2 * 8);
  }
}

TEST_CASE("frozen weights are bit-identical after an optimizer-style update") {
  const TernaryParams tern{.seed = 55, .threshold = 0.5};
  ResidualBlock<double> block("b", 6, 1, 3, PointwiseMode::FrozenTernary,
                              SkipMode::RandomTernary, tern, 1);
  SplitMixStream rng(13);
  init_block(block, rng);
  const DenseTernary before_pw = block.pw(0).materialize();
  const DenseTernary before_skip = block.skip_proj()->materialize();

  Tensor<double> x = random_tensor(rng, 2, 6, 8);
  const Tensor<double> y = block.forward(x, true);
  block.backward(y);
  std::vector<ParamRef<double>> params;
  block.collect_params(params);
  for (auto& p : params)
    for (std::size_t i = 0; i < p.value->size(); ++i)
      (*p.value)[i] -= 0.01 * (*p.grad)[i];

  REQUIRE(block.pw(0).materialize() == before_pw);
  REQUIRE(block.skip_proj()->materialize() == before_skip);
}
