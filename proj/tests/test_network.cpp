#include "doctest.h"

#include <cmath>
#include <set>

#include "support.hpp"
#include "ugodit/error.hpp"
#include "ugodit/network.hpp"
#include "ugodit/optimization.hpp"

using namespace ugodit;
using testing::random_tensor;

namespace {

// Direct reference implementation of the U-Net forward pass.
Tensor ref_conv(const ConvLayer &L, const Tensor &x) {
  const std::size_t co = L.out_channels(), ci = L.in_channels(), k = L.kernel(), h = x.height(), w = x.width();
  const long p = long(k / 2);
  Tensor out({co, h, w});
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < w; ++xx) {
        double s = L.bias[o];
        for (std::size_t i = 0; i < ci; ++i)
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long sy = long(y) + long(ky) - p, sx = long(xx) + long(kx) - p;
              if (sy < 0 || sx < 0 || sy >= long(h) || sx >= long(w))
                continue;
              s += L.weight[((o * ci + i) * k + ky) * k + kx] * x.at(i, std::size_t(sy), std::size_t(sx));
            }
        out.at(o, y, xx) = s;
      }
  return out;
}

Tensor ref_act(const ArchitectureSpec &s, Tensor t) {
  for (double &v : t.storage())
    v = v > 0 ? v : s.activation_slope() * v;
  return t;
}

Tensor ref_pool(const Tensor &x) {
  Tensor o({x.channels(), x.height() / 2, x.width() / 2});
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t y = 0; y < o.height(); ++y)
      for (std::size_t xx = 0; xx < o.width(); ++xx)
        o.at(c, y, xx) = 0.25 * (x.at(c, 2 * y, 2 * xx) + x.at(c, 2 * y + 1, 2 * xx) + x.at(c, 2 * y, 2 * xx + 1) +
                                 x.at(c, 2 * y + 1, 2 * xx + 1));
  return o;
}

Tensor ref_up(const Tensor &x) {
  Tensor o({x.channels(), x.height() * 2, x.width() * 2});
  for (std::size_t c = 0; c < o.channels(); ++c)
    for (std::size_t y = 0; y < o.height(); ++y)
      for (std::size_t xx = 0; xx < o.width(); ++xx)
        o.at(c, y, xx) = x.at(c, y / 2, xx / 2);
  return o;
}

Tensor ref_forward(const ArchitectureSpec &s, const EncoderParams &phi, const DecoderParams &psi, const Tensor &z) {
  std::vector<Tensor> pooled;
  Tensor x = z;
  for (int l = 0; l < s.depth; ++l) {
    x = ref_pool(ref_act(s, ref_conv(phi.layers[std::size_t(l)], x)));
    pooled.push_back(x);
  }
  Tensor d = pooled.back();
  for (int l = s.depth - 1; l >= 0; --l) {
    Tensor u = ref_up(d);
    if (s.skip && l >= 1)
      u = concat_channels(u, pooled[std::size_t(l - 1)]);
    d = ref_act(s, ref_conv(psi.layers[std::size_t(l)], u));
  }
  Tensor out = ref_conv(psi.layers[std::size_t(s.depth)], d);
  for (double &v : out.storage())
    v = 1.0 / (1.0 + std::exp(-v));
  return out;
}

template <class P> void randomize_biases(P &p, std::uint64_t seed) {
  for (auto &L : p.layers)
    L.bias = random_tensor(L.bias.shape(), seed++, -0.1, 0.1);
}

} // namespace

TEST_CASE("architecture validation and canonical form") {
  ArchitectureSpec s;
  CHECK_NOTHROW(s.validate());
  CHECK(ArchitectureSpec::parse_canonical(s.canonical()) == s);
  ArchitectureSpec t = s;
  t.kernel_size = 5;
  CHECK(t.fingerprint() != s.fingerprint());
  t.kernel_size = 4;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = s;
  t.channels.pop_back();
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = s;
  t.activation = "tanh";
  CHECK_THROWS_AS(t.validate(), ConfigError);
  CHECK_NOTHROW(s.validate_input(64, 32));
  CHECK_THROWS_AS(s.validate_input(48, 48), ContractError);
  CHECK_THROWS_AS(ArchitectureSpec::parse_canonical("depth=3"), FormatError);
}

TEST_CASE("forward pass agrees with a direct reference implementation") {
  for (bool skip : {true, false})
    for (int depth : {1, 2, 3}) {
      ArchitectureSpec s = testing::small_spec(2, depth);
      s.skip = skip;
      s.channels = std::vector<std::size_t>{3, 5, 4};
      s.channels.resize(std::size_t(depth));
      auto [phi, psi] = init_params(s, 0.0, 17, true);
      randomize_biases(phi, 1);
      randomize_biases(psi, 50);
      const Tensor z = random_tensor({2, 16, 16}, 5, 0.0, 1.0);
      const Tensor out = forward_pass(s, phi, psi, z);
      CHECK(out.shape() == Shape{2, 16, 16});
      CHECK(max_abs_diff(out, ref_forward(s, phi, psi, z)) < 1e-12);
    }
}

TEST_CASE("depth-1 identity network is a linear map followed by the sigmoid") {
  ArchitectureSpec s = testing::small_spec(1, 1);
  s.activation = "identity";
  s.channels = {1};
  s.kernel_size = 1;
  auto [phi, psi] = init_params(s, 0.0, 1, false);
  phi.layers[0].weight[0] = 1.0;
  psi.layers[0].weight[0] = 1.0;
  psi.layers[1].weight[0] = 1.0;
  Tensor z({1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i)
    z[i] = double(i) / 16.0;
  const Tensor out = forward_pass(s, phi, psi, z);
  // pool then nearest upsample: every output equals the sigmoid of its 2x2 block mean
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) {
      const std::size_t by = y / 2 * 2, bx = x / 2 * 2;
      const double m = 0.25 * (z.at(0, by, bx) + z.at(0, by + 1, bx) + z.at(0, by, bx + 1) + z.at(0, by + 1, bx + 1));
      CHECK(out.at(0, y, x) == doctest::Approx(1.0 / (1.0 + std::exp(-m))).epsilon(1e-14));
    }
}

TEST_CASE("initialization is seeded, fan-in scaled, and decoders draw independent streams") {
  ArchitectureSpec s;
  s.in_channels = s.out_channels = 2;
  const auto a = init_encoder(s, 0.0, 9, true);
  CHECK(a == init_encoder(s, 0.0, 9, true));
  CHECK_FALSE(a == init_encoder(s, 0.0, 10, true));
  CHECK_FALSE(init_decoder(s, 0.0, 9, 0, true) == init_decoder(s, 0.0, 9, 1, true));
  const Tensor &w = a.layers[1].weight;
  const double fan_in = double(w.dim(1) * w.dim(2) * w.dim(3));
  const double sd = std::sqrt(squared_norm(w) / double(w.size()));
  CHECK(sd == doctest::Approx(std::sqrt(2.0 / fan_in)).epsilon(0.15));
  const auto fixed = init_encoder(s, 0.01, 9, false);
  CHECK(std::sqrt(squared_norm(fixed.layers[2].weight) / double(fixed.layers[2].weight.size())) ==
        doctest::Approx(0.01).epsilon(0.15));
  for (const auto &L : a.layers)
    CHECK(squared_norm(L.bias) == 0.0);
  CHECK_THROWS_AS(init_encoder(s, -1.0, 1), ConfigError);
}

TEST_CASE("parameters built for another architecture are rejected") {
  ArchitectureSpec s = testing::small_spec(2);
  ArchitectureSpec t = s;
  t.channels = {4, 6};
  const auto [phi, psi] = init_params(t, 0.0, 1, true);
  CHECK_THROWS_AS(forward_pass(s, phi, psi, Tensor({2, 8, 8})), ArchitectureError);
  const auto [phi2, psi2] = init_params(s, 0.0, 1, true);
  CHECK_THROWS_AS(forward_pass(s, phi2, psi2, Tensor({3, 8, 8})), ContractError);
  CHECK_THROWS_AS(forward_pass(s, phi2, psi2, Tensor({2, 6, 6})), ContractError);
}

TEST_CASE("backpropagation matches central differences for every parameter group") {
  ArchitectureSpec s = testing::small_spec(2);
  s.channels = {3, 4};
  auto [phi, psi] = init_params(s, 0.0, 4, true);
  randomize_biases(phi, 7);
  randomize_biases(psi, 70);
  const ForwardOperator op(SrOperator{2});
  const Tensor z = random_tensor({2, 8, 8}, 3, 0.0, 1.0);
  const Tensor y = random_tensor({2, 4, 4}, 4, 0.0, 1.0);
  const double lambda = 0.7;

  auto gpsi = zeros_like(psi);
  auto gphi = zeros_like(phi);
  Tensor gz;
  item_loss_and_gradient(s, phi, psi, op, y, z, lambda, &gpsi, &gphi, &gz);

  const double h = 1e-5;
  auto loss = [&](const EncoderParams &a, const DecoderParams &b, const Tensor &zz) {
    return item_loss(s, a, b, op, y, zz, lambda).total();
  };
  auto check = [](double analytic, double fd) {
    CHECK(std::abs(analytic - fd) <= 1e-5 * std::max(1e-3, std::abs(fd)) + 1e-9);
  };
  for (std::size_t l = 0; l < phi.layers.size(); ++l)
    for (std::size_t i = 0; i < phi.layers[l].weight.size(); i += 7) {
      auto p = phi, m = phi;
      p.layers[l].weight[i] += h;
      m.layers[l].weight[i] -= h;
      check(gphi.layers[l].weight[i], (loss(p, psi, z) - loss(m, psi, z)) / (2 * h));
    }
  for (std::size_t l = 0; l < psi.layers.size(); ++l) {
    for (std::size_t i = 0; i < psi.layers[l].weight.size(); i += 5) {
      auto p = psi, m = psi;
      p.layers[l].weight[i] += h;
      m.layers[l].weight[i] -= h;
      check(gpsi.layers[l].weight[i], (loss(phi, p, z) - loss(phi, m, z)) / (2 * h));
    }
    auto p = psi, m = psi;
    p.layers[l].bias[0] += h;
    m.layers[l].bias[0] -= h;
    check(gpsi.layers[l].bias[0], (loss(phi, p, z) - loss(phi, m, z)) / (2 * h));
  }
  for (std::size_t i = 0; i < z.size(); i += 9) {
    Tensor p = z, m = z;
    p[i] += h;
    m[i] -= h;
    check(gz[i], (loss(phi, psi, p) - loss(phi, psi, m)) / (2 * h));
  }
}

TEST_CASE("float32 rounding and checksums") {
  ArchitectureSpec s = testing::small_spec(2);
  auto phi = init_encoder(s, 0.0, 2, true);
  const auto before = params_checksum(phi);
  phi.layers[0].weight[0] = 0.1;
  CHECK(params_checksum(phi) != before);
  round_to_float32(phi);
  CHECK(phi.layers[0].weight[0] == double(0.1f));
  CHECK(parameter_count(phi) == 4 * 2 * 9 + 4 + 4 * 4 * 9 + 4);
}
