#include <cmath>
#include <numeric>

#include "doctest.h"
#include "rtb/core/adam.hpp"
#include "rtb/core/error.hpp"
#include "rtb/core/gumbel.hpp"
#include "rtb/core/hash.hpp"
#include "rtb/core/mlp.hpp"
#include "rtb/core/rng.hpp"
#include "rtb/core/tensor.hpp"
#include "support/oracles.hpp"

using rtb::Activation;
using rtb::MlpParams;
using rtb::Rng;
using rtb::Tensor;

namespace {

MlpParams single_layer(Tensor w, Tensor b, Activation a) {
  MlpParams p;
  p.layers.push_back({std::move(w), std::move(b), a});
  return p;
}

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -3.0, double hi = 3.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("shape and value count must agree") {
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), rtb::ShapeError);
    const Tensor t({2, 3}, 1.5);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK(t.at(1, 2) == 1.5);
    CHECK(Tensor::vector({1, 2, 3}).rows() == 1);
  }

  TEST_CASE("all_finite flags nan and inf") {
    Tensor t = Tensor::vector({1, 2});
    CHECK(t.all_finite());
    t[1] = std::nan("");
    CHECK_FALSE(t.all_finite());
  }
}

TEST_SUITE("rng") {
  TEST_CASE("same seed and label give the same stream") {
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(7, "other");
    CHECK(Rng(7).next_u64() != c.next_u64());
  }

  TEST_CASE("split streams are reproducible and distinct") {
    const Rng root(3);
    Rng w0 = root.split("worker", 0);
    Rng w0b = root.split("worker", 0);
    Rng w1 = root.split("worker", 1);
    const auto x = w0.next_u64();
    CHECK(x == w0b.next_u64());
    CHECK(x != w1.next_u64());
  }

  TEST_CASE("uniform stays in the open unit interval with the right moments") {
    Rng r(11);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double u = r.uniform();
      REQUIRE(u > 0.0);
      REQUIRE(u < 1.0);
      sum += u;
      sq += u * u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sq / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12.0).epsilon(0.02));
  }

  TEST_CASE("normal draws have zero mean and unit variance") {
    Rng r(5);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double z = r.normal();
      sum += z;
      sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("uniform_index covers the range evenly") {
    Rng r(9);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[r.uniform_index(7)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  }
}

TEST_SUITE("mlp_forward") {
  TEST_CASE("identity layer with unit weights passes the input through") {
    auto p = single_layer(Tensor::matrix(2, 2, {1, 0, 0, 1}), Tensor::vector({0, 0}),
                          Activation::Identity);
    const auto out = rtb::mlp_forward(p, Tensor::vector({1, 2}), false).output;
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 2.0);
  }

  TEST_CASE("relu zeroes negative inputs") {
    auto p = single_layer(Tensor::matrix(2, 2, {1, 0, 0, 1}), Tensor::vector({0, 0}),
                          Activation::Relu);
    const auto out = rtb::mlp_forward(p, Tensor::vector({-1, 3}), false).output;
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 3.0);
  }

  TEST_CASE("random three-layer net matches a straight-line evaluation") {
    Rng rng(21);
    auto p = rtb::make_mlp({5, 7, 6, 3}, Activation::Tanh, Activation::Identity, rng);
    for (auto* t : p.tensors()) {
      for (auto& v : t->values()) v = rng.uniform(-1, 1);
    }
    const Tensor x = random_tensor({4, 5}, rng);
    const auto out = rtb::mlp_forward(p, x, false).output;
    for (std::size_t r = 0; r < 4; ++r) {
      const auto row = x.row(r);
      const auto expect = oracle::forward(p, {row.begin(), row.end()});
      for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(out.at(r, c) - expect[c]) < 1e-12);
    }
  }

  TEST_CASE("input width mismatch is a shape error") {
    Rng rng(1);
    auto p = rtb::make_mlp({3, 2}, Activation::Relu, Activation::Identity, rng);
    CHECK_THROWS_AS(rtb::mlp_forward(p, Tensor::vector({1, 2}), false), rtb::ShapeError);
  }
}

TEST_SUITE("backward") {
  TEST_CASE("linear scalar map has gradient x for w and w for x") {
    auto p = single_layer(Tensor::matrix(1, 3, {0.5, -2, 4}), Tensor::vector({0.25}),
                          Activation::Identity);
    const Tensor x = Tensor::vector({1, 2, 3});
    auto fwd = rtb::mlp_forward(p, x, true);
    const auto g = rtb::backward(fwd.trace, Tensor({1, 1}, 1.0));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(g.params.layers[0].weight[i] == x[i]);
      CHECK(g.input[i] == p.layers[0].weight[i]);
    }
    CHECK(g.params.layers[0].bias[0] == 1.0);
  }

  TEST_CASE("zero seed gives zero gradients") {
    Rng rng(2);
    auto p = rtb::make_mlp({4, 5, 2}, Activation::Tanh, Activation::Identity, rng);
    auto fwd = rtb::mlp_forward(p, random_tensor({3, 4}, rng), true);
    const auto g = rtb::backward(fwd.trace, Tensor({3, 2}, 0.0));
    for (const auto* t : g.params.tensors()) {
      for (double v : t->values()) CHECK(v == 0.0);
    }
    for (double v : g.input.values()) CHECK(v == 0.0);
  }

  TEST_CASE("missing trace is an error") {
    rtb::MlpTrace empty;
    CHECK_THROWS_AS(rtb::backward(empty, Tensor({1, 1}, 1.0)), rtb::Error);
  }

  TEST_CASE("two-layer net gradients agree with central differences") {
    Rng rng(31);
    auto p = rtb::make_mlp({4, 6, 3}, Activation::Tanh, Activation::Identity, rng);
    Tensor x = random_tensor({3, 4}, rng);
    const Tensor seed = random_tensor({3, 3}, rng, -1, 1);
    auto objective = [&] {
      const auto out = rtb::mlp_forward(p, x, false).output;
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) s += seed[i] * out[i];
      return s;
    };
    auto fwd = rtb::mlp_forward(p, x, true);
    const auto g = rtb::backward(fwd.trace, seed);
    auto params = p.tensors();
    auto grads = g.params.tensors();
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (std::size_t j = 0; j < params[t]->size(); ++j) {
        const double fd = oracle::central_difference(objective, (*params[t])[j], 1e-5);
        CHECK(oracle::relative_error((*grads[t])[j], fd) < 1e-6);
      }
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double fd = oracle::central_difference(objective, x[j], 1e-5);
      CHECK(oracle::relative_error(g.input[j], fd) < 1e-6);
    }
  }
}

TEST_SUITE("gradient penalty") {
  TEST_CASE("unit-norm linear critic has zero penalty and zero gradient") {
    const double s = 1.0 / std::sqrt(2.0);
    auto p = single_layer(Tensor::matrix(1, 2, {s, s}), Tensor::vector({0.3}),
                          Activation::Identity);
    Rng rng(4);
    const auto gp = rtb::input_gradient_norm_grad(p, random_tensor({5, 2}, rng));
    CHECK(gp.weighted_penalty < 1e-30);
    for (const auto* t : gp.grad.tensors()) {
      for (double v : t->values()) CHECK(std::abs(v) < 1e-15);
    }
  }

  TEST_CASE("one-dimensional critic 2x") {
    auto p = single_layer(Tensor::matrix(1, 1, {2.0}), Tensor::vector({0.0}), Activation::Identity);
    const auto gp = rtb::input_gradient_norm_grad(p, Tensor::matrix(1, 1, {0.7}));
    CHECK(gp.input_grad_norms[0] == doctest::Approx(2.0));
    CHECK(gp.weighted_penalty == doctest::Approx(1.0));
    CHECK(gp.grad.layers[0].weight[0] == doctest::Approx(2.0));
    CHECK(gp.grad.layers[0].bias[0] == 0.0);
  }

  TEST_CASE("non-scalar critic is rejected") {
    Rng rng(1);
    auto p = rtb::make_mlp({3, 2}, Activation::Tanh, Activation::Identity, rng);
    CHECK_THROWS_AS(rtb::input_gradient_norm_grad(p, Tensor({1, 3}, 0.1)), rtb::ShapeError);
  }

  TEST_CASE("tanh critic penalty gradient agrees with finite differences") {
    Rng rng(77);
    auto p = rtb::make_mlp({4, 8, 1}, Activation::Tanh, Activation::Identity, rng);
    const Tensor x = random_tensor({6, 4}, rng);
    const auto gp = rtb::input_gradient_norm_grad(p, x);
    auto penalty = [&] { return rtb::input_gradient_norm_grad(p, x).weighted_penalty; };
    auto params = p.tensors();
    auto grads = gp.grad.tensors();
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (std::size_t j = 0; j < params[t]->size(); ++j) {
        const double fd = oracle::central_difference(penalty, (*params[t])[j], 1e-5);
        CHECK(oracle::relative_error((*grads[t])[j], fd) < 1e-4);
      }
    }
  }
}

TEST_SUITE("gumbel_softmax") {
  const rtb::FieldLayout two_fields = {{0, 3, false}, {3, 2, false}};

  TEST_CASE("zero noise at unit temperature is the softmax of log-probabilities") {
    const Tensor logp = Tensor::vector({std::log(0.2), std::log(0.3), std::log(0.5),
                                        std::log(0.9), std::log(0.1)});
    const auto y = rtb::gumbel_softmax(logp, two_fields, 1.0, Tensor({1, 5}, 0.0));
    const double expect[] = {0.2, 0.3, 0.5, 0.9, 0.1};
    for (std::size_t j = 0; j < 5; ++j) CHECK(y[j] == doctest::Approx(expect[j]).epsilon(1e-12));
  }

  TEST_CASE("tiny temperature gives a one-hot at the perturbed argmax") {
    Rng rng(3);
    const Tensor logits = Tensor::vector({0.1, 0.4, -0.2, 0.0, 0.3});
    const auto noise = rtb::sample_relaxation_noise(1, two_fields, rng);
    const auto y = rtb::gumbel_softmax(logits, two_fields, 1e-6, noise);
    for (const auto& f : two_fields) {
      std::size_t best = f.offset;
      for (std::size_t j = f.offset; j < f.offset + f.width; ++j) {
        if (logits[j] + noise[j] > logits[best] + noise[best]) best = j;
      }
      CHECK(y[best] > 1.0 - 1e-6);
    }
  }

  TEST_CASE("outputs are simplex points per field") {
    Rng rng(8);
    const Tensor logits = random_tensor({20, 5}, rng);
    const auto noise = rtb::sample_relaxation_noise(20, two_fields, rng);
    const auto y = rtb::gumbel_softmax(logits, two_fields, 0.667, noise);
    for (std::size_t r = 0; r < 20; ++r) {
      for (const auto& f : two_fields) {
        double s = 0.0;
        for (std::size_t j = f.offset; j < f.offset + f.width; ++j) {
          CHECK(y.at(r, j) >= 0.0);
          s += y.at(r, j);
        }
        CHECK(std::abs(s - 1.0) < 1e-12);
      }
    }
  }

  TEST_CASE("hard argmax of uniform logits is uniform over categories") {
    const rtb::FieldLayout one = {{0, 4, false}};
    Rng rng(12);
    const std::size_t n = 100000;
    const auto noise = rtb::sample_relaxation_noise(n, one, rng);
    const auto hard = rtb::harden(rtb::gumbel_softmax(Tensor({n, 4}, 0.0), one, 1.0, noise), one);
    std::vector<double> freq(4, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < 4; ++j) freq[j] += hard.at(r, j) / static_cast<double>(n);
    }
    for (double f : freq) CHECK(std::abs(f - 0.25) < 0.01);
  }

  TEST_CASE("non-positive temperature is rejected") {
    CHECK_THROWS_AS(rtb::gumbel_softmax(Tensor({1, 5}, 0.0), two_fields, 0.0, Tensor({1, 5}, 0.0)),
                    rtb::ConfigError);
  }

  TEST_CASE("backward agrees with central differences") {
    const rtb::FieldLayout layout = {{0, 3, false}, {3, 2, true}};
    Rng rng(14);
    Tensor logits = random_tensor({2, 5}, rng, -1, 1);
    const auto noise = rtb::sample_relaxation_noise(2, layout, rng);
    const Tensor w = random_tensor({2, 5}, rng, -1, 1);
    auto f = [&] {
      const auto y = rtb::gumbel_softmax(logits, layout, 0.667, noise);
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
      return s;
    };
    const auto y = rtb::gumbel_softmax(logits, layout, 0.667, noise);
    const auto g = rtb::gumbel_softmax_backward(y, layout, 0.667, w);
    for (std::size_t j = 0; j < logits.size(); ++j) {
      const double fd = oracle::central_difference(f, logits[j], 1e-5);
      CHECK(oracle::relative_error(g[j], fd) < 1e-6);
    }
  }
}

TEST_SUITE("adam") {
  TEST_CASE("zero gradient leaves parameters unchanged") {
    Tensor p = Tensor::vector({1.0, -2.0});
    const Tensor g({2}, 0.0);
    rtb::AdamState st;
    rtb::adam_step({&p}, {&g}, st, {});
    CHECK(p[0] == 1.0);
    CHECK(p[1] == -2.0);
  }

  TEST_CASE("first step moves by the learning rate against the gradient sign") {
    Tensor p = Tensor::vector({0.0, 0.0});
    const Tensor g = Tensor::vector({3.0, -0.5});
    rtb::AdamState st;
    rtb::AdamConfig cfg;
    cfg.learning_rate = 0.01;
    rtb::adam_step({&p}, {&g}, st, cfg);
    CHECK(p[0] == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(st.step == 1);
  }

  TEST_CASE("quadratic converges, loss decreasing until the first overshoot") {
    Tensor w = Tensor::vector({0.0});
    rtb::AdamState st;
    rtb::AdamConfig cfg;
    cfg.learning_rate = 0.1;
    double prev = 9.0;
    bool crossed = false;
    for (int i = 0; i < 50; ++i) {
      const Tensor g = Tensor::vector({2.0 * (w[0] - 3.0)});
      rtb::adam_step({&w}, {&g}, st, cfg);
      const double loss = (w[0] - 3.0) * (w[0] - 3.0);
      crossed = crossed || w[0] > 3.0;
      if (!crossed) CHECK(loss < prev);
      prev = loss;
    }
    CHECK(std::abs(w[0] - 3.0) < 0.5);
  }

  TEST_CASE("weight decay acts like an l2 gradient") {
    Tensor a = Tensor::vector({2.0});
    Tensor b = Tensor::vector({2.0});
    rtb::AdamState sa, sb;
    rtb::AdamConfig decayed;
    decayed.weight_decay = 0.5;
    const Tensor zero({1}, 0.0);
    const Tensor l2 = Tensor::vector({0.5 * 2.0});
    rtb::adam_step({&a}, {&zero}, sa, decayed);
    rtb::adam_step({&b}, {&l2}, sb, {});
    CHECK(a[0] == b[0]);
  }
}

TEST_SUITE("xavier_init") {
  TEST_CASE("entries respect the bound") {
    Rng rng(1);
    const auto t = rtb::xavier_init({4, 2}, rng);
    for (double v : t.values()) CHECK(std::abs(v) <= 1.0);
  }

  TEST_CASE("fixed seed repeats") {
    Rng a(5), b(5);
    CHECK(rtb::xavier_init({3, 7}, a) == rtb::xavier_init({3, 7}, b));
  }

  TEST_CASE("variance matches the uniform law") {
    Rng rng(6);
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (int k = 0; k < 10; ++k) {
      for (double v : rtb::xavier_init({100, 100}, rng).values()) {
        sum += v;
        sq += v * v;
        ++n;
      }
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sq / static_cast<double>(n) - mean * mean;
    const double expect = 2.0 / 200.0;
    CHECK(std::abs(var - expect) / expect < 0.05);
  }
}

TEST_SUITE("hash") {
  TEST_CASE("sha256 of a known string") {
    CHECK(rtb::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    rtb::Sha256 h;
    h.update("a");
    h.update("bc");
    CHECK(h.hex_digest() == rtb::sha256_hex("abc"));
  }
}
