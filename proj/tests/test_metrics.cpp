#include "doctest.h"

#include <cmath>
#include <random>

#include "support.hpp"
#include "ugodit/error.hpp"
#include "ugodit/metrics.hpp"

using namespace ugodit;
using testing::random_tensor;

namespace {

// Window-by-window SSIM with an explicit 2-D Gaussian.
double brute_ssim(const Tensor &a, const Tensor &b) {
  const int win = 11;
  const double sigma = 1.5;
  double wts[11][11], wsum = 0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) {
      wts[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * sigma * sigma));
      wsum += wts[i][j];
    }
  double peak = 0;
  for (double v : b.storage())
    peak = std::max(peak, v);
  const double c1 = std::pow(0.01 * peak, 2), c2 = std::pow(0.03 * peak, 2);
  double total = 0;
  int count = 0;
  for (std::size_t ch = 0; ch < a.channels(); ++ch)
    for (std::size_t y = 0; y + win <= a.height(); ++y)
      for (std::size_t x = 0; x + win <= a.width(); ++x) {
        double ma = 0, mb = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) {
            ma += wts[i][j] / wsum * a.at(ch, y + i, x + j);
            mb += wts[i][j] / wsum * b.at(ch, y + i, x + j);
          }
        double va = 0, vb = 0, cv = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) {
            const double da = a.at(ch, y + i, x + j) - ma, db = b.at(ch, y + i, x + j) - mb;
            va += wts[i][j] / wsum * da * da;
            vb += wts[i][j] / wsum * db * db;
            cv += wts[i][j] / wsum * da * db;
          }
        total += (2 * ma * mb + c1) * (2 * cv + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / count;
}

} // namespace

TEST_CASE("psnr closed form") {
  Tensor ref({1, 10, 10}, 0.5);
  ref[0] = 1.0;
  Tensor est = ref;
  // every pixel off by 0.1 with peak 1: 10 log10(1 / 0.01) = 20 dB
  for (double &v : est.storage())
    v += 0.1;
  CHECK(std::abs(psnr(est, ref) - 20.0) < 1e-9);
  CHECK(psnr(ref, ref) == kPsnrCapDb);
  CHECK_THROWS_AS(psnr(Tensor({1, 2, 2}), ref), ContractError);
}

TEST_CASE("ssim agrees with a window-by-window computation") {
  const Tensor b = random_tensor({2, 20, 23}, 1, 0.0, 1.0);
  Tensor a = b;
  const Tensor n = random_tensor(b.shape(), 2, -0.2, 0.2);
  a += n;
  CHECK(std::abs(ssim(a, b) - brute_ssim(a, b)) < 1e-9);
  CHECK(ssim(b, b) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(ssim(Tensor({1, 8, 8}), Tensor({1, 8, 8})), ContractError);
}

TEST_CASE("MRI quality is measured on magnitude images") {
  Tensor x({2, 12, 12});
  for (std::size_t i = 0; i < 144; ++i) {
    x[i] = 0.6;
    x[144 + i] = 0.8;
  }
  const Tensor m = to_magnitude(x);
  CHECK(m[5] == doctest::Approx(1.0));
  Tensor rotated({2, 12, 12});
  for (std::size_t i = 0; i < 144; ++i)
    rotated[i] = 1.0;
  CHECK(evaluate_quality(OperatorKind::mri, rotated, x).psnr_db == kPsnrCapDb);
  CHECK(task_psnr(OperatorKind::sr, rotated, x) < 20.0);
}

TEST_CASE("lf_ratio of constant and white-noise maps") {
  const Tensor c({3, 32, 32}, 0.7);
  CHECK(lf_ratio(feature_spectrum(c, 0.25)) == 1.0);
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  double mean = 0;
  for (int t = 0; t < 20; ++t) {
    Tensor w({1, 32, 32});
    for (double &v : w.storage())
      v = nd(gen);
    mean += lf_ratio(feature_spectrum(w, 0.25)) / 20;
  }
  CHECK(std::abs(mean - 64.0 / 1024.0) < 0.02);
  CHECK_THROWS_AS(lf_ratio(feature_spectrum(Tensor({1, 8, 8}), 0.25)), UndefinedRatioError);
  CHECK_THROWS_AS(lf_ratio(feature_spectrum(c, 0.0)), ConfigError);
}

TEST_CASE("feature spectrum matches a direct DFT") {
  const Tensor f = random_tensor({1, 8, 8}, 4);
  std::vector<std::complex<double>> in(64);
  for (std::size_t i = 0; i < 64; ++i)
    in[i] = f[i];
  const auto k = testing::naive_dft2(in, 8, 8);
  const auto s = feature_spectrum(f);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x)
      CHECK(s.magnitudes.at(0, (y + 4) % 8, (x + 4) % 8) == doctest::Approx(std::abs(k[y * 8 + x])).epsilon(1e-10));
}

TEST_CASE("spectral probe reports every encoder level and the output") {
  ArchitectureSpec s = testing::small_spec(2, 3);
  const auto [phi, psi] = init_params(s, 0.0, 1, true);
  const auto report = spectral_probe(s, phi, psi, random_tensor({2, 16, 16}, 1, 0, 1));
  REQUIRE(report.size() == 4);
  CHECK(report[0].layer == "encoder_1");
  CHECK(report[3].layer == "decoder_output");
  for (const auto &e : report) {
    CHECK(e.lf_ratio > 0.0);
    CHECK(e.lf_ratio <= 1.0);
  }
}

TEST_CASE("trace rows must be ordered and finite") {
  auto row = [](long it, double fit, std::optional<double> p = std::nullopt, bool end = false) {
    TraceRow r;
    r.iteration = it;
    r.data_fit = fit;
    r.psnr_db = p;
    r.round_end = end;
    return r;
  };
  MetricTrace t("x", TraceRole::test);
  t.append(row(1, 1.0));
  t.append(row(2, 1.0, 20.0, true));
  CHECK_THROWS_AS(t.append(row(2, 1.0)), ContractError);
  CHECK_THROWS_AS(t.append(row(3, NAN)), ContractError);
  CHECK_THROWS_AS(t.append(row(3, 1.0, INFINITY)), ContractError);
  CHECK(t.round_rows().size() == 1);
  CHECK(t.round_rows()[0].iteration == 2);
}
