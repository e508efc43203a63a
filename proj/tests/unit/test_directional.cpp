// Copyright 2026 The vmfmil Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/special_functions/bessel.hpp>

#include "helpers.hpp"
#include "vmfmil/directional.hpp"

namespace vmfmil {
namespace {

struct Triple {
  double a, b, expected;
};

// mpmath at 50 digits, from tests/support/gen_bessel_tables.py.
constexpr Triple kLogBesselI[] = {
    {0.0, 0.001, 2.4999998437500174652e-7},
    {0.0, 0.5, 0.061549719185481303941},
    {0.0, 3.0, 1.5853076218134209155},
    {0.0, 20.0, 17.589610428244274291},
    {0.0, 150.0, 146.57657995035185909},
    {0.0, 900.0, 895.68000305127201588},
    {0.0, 5000.0, 4994.8224898735877295},
    {0.0, 100000.0, 99993.324599984316463},
    {0.5, 0.001, -3.6796688254691348369},
    {0.5, 0.5, -0.53104008831178197809},
    {0.5, 3.0, 1.5292734930923128847},
    {0.5, 20.0, 17.583195330018331757},
    {0.5, 150.0, 146.57574381974719938},
    {0.5, 900.0, 895.67986408513317188},
    {0.5, 5000.0, 4994.8224648710872085},
    {0.5, 100000.0, 99993.324598734310213},
    {1.0, 0.001, -7.6009023345420849448},
    {1.0, 0.5, -1.3552054470253344645},
    {1.0, 3.0, 1.3745684347236995742},
    {1.0, 20.0, 17.563954622519344304},
    {1.0, 150.0, 146.57323543738112852},
    {1.0, 900.0, 895.67944718675965016},
    {1.0, 5000.0, 4994.8223898635858957},
    {1.0, 100000.0, 99993.324594984291463},
    {3.5, 0.001, -29.056895123684175138},
    {3.5, 0.5, -7.2918954325666417873},
    {3.5, 3.0, -0.55526925137893156058},
    {3.5, 20.0, 17.276160529050735881},
    {3.5, 150.0, 146.53561140222887798},
    {3.5, 900.0, 895.67319371889863749},
    {3.5, 5000.0, 4994.8212647511112302},
    {3.5, 100000.0, 99993.324538734010216},
    {7.0, 0.001, -61.731478546609990739},
    {7.0, 0.5, -18.221412776219336206},
    {7.0, 3.0, -5.4098929938508336674},
    {7.0, 20.0, 16.346256489504650782},
    {7.0, 150.0, 146.41272842370386444},
    {7.0, 900.0, 895.65276582504385371},
    {7.0, 5000.0, 4994.8175893842823419},
    {7.0, 100000.0, 99993.32435498309155},
    {31.0, 0.001, -313.72019979130736319},
    {31.0, 0.5, -121.06539568082593674},
    {31.0, 3.0, -65.452567402979701758},
    {31.0, 20.0, -3.7194742869383473324},
    {31.0, 150.0, 143.37397498675969453},
    {31.0, 900.0, 895.14587014206737109},
    {31.0, 5000.0, 4994.726380569526479},
    {31.0, 100000.0, 99993.319794960329684},
    {49.0, 0.001, -517.0099644589069207},
    {49.0, 0.5, -212.49291765653766282},
    {49.0, 3.0, -124.65297347911530997},
    {49.0, 20.0, -29.776410903077043054},
    {49.0, 150.0, 138.61672293930956369},
    {49.0, 900.0, 894.34570251893818724},
    {49.0, 5000.0, 4994.5823677810824017},
    {49.0, 100000.0, 99993.31259492453102},
    {255.0, 0.001, -3099.9422283006550852},
    {255.0, 0.5, -1515.2169190634637208},
    {255.0, 3.0, -1058.3097096385991053},
    {255.0, 20.0, -574.16257367092117949},
    {255.0, 150.0, -39.626924613236775173},
    {255.0, 900.0, 859.77172590031037498},
    {255.0, 5000.0, 4988.3207486457085736},
    {255.0, 100000.0, 99992.999473534855903},
    {2047.0, 0.001, -29123.373688067197228},
    {2047.0, 0.5, -16402.070880079514946},
    {2047.0, 3.0, -12734.33817845474629},
    {2047.0, 20.0, -8850.8858404826392871},
    {2047.0, 150.0, -4723.6834404923161894},
    {2047.0, 900.0, -962.0644178083067856},
    {2047.0, 5000.0, 4581.3413725155352712},
    {2047.0, 100000.0, 99972.374181735096098},
};

constexpr Triple kBesselRatio[] = {
    {2, 0.01, 0.0049999375010416488674},
    {2, 1.0, 0.44638996589653450705},
    {2, 10.0, 0.94859982595484595897},
    {2, 100.0, 0.99498737300516876559},
    {2, 1000.0, 0.9994998748748042802},
    {2, 100000.0, 0.999994999987499875},
    {3, 0.01, 0.0033333111113227492758},
    {3, 1.0, 0.31303528549933130364},
    {3, 10.0, 0.90000000412230725337},
    {3, 100.0, 0.99},
    {3, 1000.0, 0.999},
    {3, 100000.0, 0.99999},
    {8, 0.01, 0.0012499984375032552268},
    {8, 1.0, 0.12346931414340686941},
    {8, 10.0, 0.69751136723306428734},
    {8, 100.0, 0.96544184234641988338},
    {8, 1000.0, 0.99650437937196697189},
    {8, 100000.0, 0.99996500043750437497},
    {64, 0.01, 0.00015624999630089979446},
    {64, 1.0, 0.015621302598621634365},
    {64, 10.0, 0.15271190419708313607},
    {64, 100.0, 0.73238019409658213679},
    {64, 1000.0, 0.9689807403096334821},
    {64, 100000.0, 0.99968504803797922836},
    {512, 0.01, 0.000019531249992578410401},
    {512, 1.0, 0.0019531175784661718326},
    {512, 10.0, 0.019523834023025135086},
    {512, 100.0, 0.18840476401483570717},
    {512, 1000.0, 0.77653093290253886844},
    {512, 100000.0, 0.99744825126472739582},
    {4096, 0.01, 2.4414062499854552376e-6},
    {4096, 1.0, 0.00024414061045518846342},
    {4096, 10.0, 0.0024413917053599471864},
    {4096, 100.0, 0.024399534982850465719},
    {4096, 1000.0, 0.23110671678830691339},
    {4096, 100000.0, 0.97973449058904352302},
};

constexpr Triple kLogNormalizer[] = {
    {2, 0.0, 1.8378770664093454836},
    {2, 0.1, 1.8403755056432217272},
    {2, 1.0, 2.0737914249165241323},
    {2, 10.0, 9.7808491495280410381},
    {2, 100.0, 98.6176097563519292},
    {2, 10000.0, 9996.3137808478416465},
    {3, 0.0, 2.531024246969290793},
    {3, 0.1, 2.5326903584328712537},
    {3, 1.0, 2.6924636085404864266},
    {3, 10.0, 9.535291971354146175},
    {3, 100.0, 97.232706880421254116},
    {3, 10000.0, 9992.6275366944331627},
    {16, 0.0, 1.3258249062897324024},
    {16, 0.1, 1.326137400864611224},
    {16, 1.0, 1.35702087765028362},
    {16, 10.0, 4.0572990472682166443},
    {16, 100.0, 79.000422404390203429},
    {16, 10000.0, 9944.7040875864605844},
    {100, 0.0, -86.636102473314931992},
    {100, 0.1, -86.636052473339441765},
    {100, 1.0, -86.631102718381553961},
    {100, 10.0, -86.138522577463650114},
    {100, 100.0, -48.814505688995299723},
    {100, 10000.0, 9634.9430231121866363},
    {4096, 0.0, -11219.226399984545245},
    {4096, 0.1, -11219.226398763842121},
    {4096, 1.0, -11219.226277914236382},
    {4096, 10.0, -11219.21419298965699},
    {4096, 100.0, -11218.006060191501195},
    {4096, 10000.0, -5303.9167697515250011},
};

using testing::relative_error;

TEST_CASE("log_bessel_i matches high-precision values in every regime") {
  for (const auto& [nu, x, expected] : kLogBesselI) {
    CAPTURE(nu);
    CAPTURE(x);
    CHECK(relative_error(log_bessel_i(nu, x), expected) < 1e-12);
  }
}

TEST_CASE("log_bessel_i agrees with Boost long double on a random grid") {
  Rng rng(11);
  std::uniform_real_distribution<double> order(0.0, 200.0);
  std::uniform_real_distribution<double> log_arg(std::log(1e-2), std::log(5e3));
  for (int i = 0; i < 300; ++i) {
    const double nu = order(rng);
    const double x = std::exp(log_arg(rng));
    const long double ref = boost::math::cyl_bessel_i(static_cast<long double>(nu),
                                                      static_cast<long double>(x));
    if (!(ref > 0.0L) || !std::isfinite(static_cast<double>(std::log(ref)))) continue;
    CAPTURE(nu);
    CAPTURE(x);
    CHECK(relative_error(log_bessel_i(nu, x), static_cast<double>(std::log(ref))) < 1e-10);
  }
}

TEST_CASE("log_bessel_i edge values") {
  CHECK(log_bessel_i(0.0, 0.0) == 0.0);
  CHECK(std::isinf(log_bessel_i(2.0, 0.0)));
  CHECK(log_bessel_i(2.0, 0.0) < 0.0);
  CHECK_THROWS_AS(log_bessel_i(-1.0, 1.0), DomainError);
  CHECK_THROWS_AS(log_bessel_i(1.0, -1.0), DomainError);
}

TEST_CASE("bessel_ratio matches high-precision values") {
  for (const auto& [d, kappa, expected] : kBesselRatio) {
    CAPTURE(d);
    CAPTURE(kappa);
    CHECK(std::abs(bessel_ratio(static_cast<int>(d), kappa) - expected) < 1e-12);
  }
  CHECK(bessel_ratio(5, 0.0) == 0.0);
}

TEST_CASE("bessel_ratio derivative matches finite differences") {
  for (int d : {2, 3, 16, 128}) {
    for (double kappa : {0.3, 2.0, 25.0, 400.0}) {
      const double h = 1e-5 * std::max(1.0, kappa);
      const double fd = (bessel_ratio(d, kappa + h) - bessel_ratio(d, kappa - h)) / (2.0 * h);
      CAPTURE(d);
      CAPTURE(kappa);
      CHECK(std::abs(bessel_ratio_derivative(d, kappa) - fd) < 1e-7);
    }
    CHECK(bessel_ratio_derivative(d, 0.0) == doctest::Approx(1.0 / d));
  }
}

TEST_CASE("log_normalizer matches high-precision values") {
  for (const auto& [d, kappa, expected] : kLogNormalizer) {
    CAPTURE(d);
    CAPTURE(kappa);
    CHECK(relative_error(log_normalizer(static_cast<int>(d), kappa), expected) < 1e-12);
  }
}

TEST_CASE("log_normalizer on the 2-sphere has the sinh closed form") {
  for (double kappa : {0.1, 1.0, 10.0, 100.0}) {
    const double closed = std::log(4.0 * std::numbers::pi * std::sinh(kappa) / kappa);
    CHECK(std::abs(log_normalizer(3, kappa) - closed) <= 1e-10 * std::abs(closed));
  }
}

TEST_CASE("log_normalizer is finite and increasing in kappa up to d=4096") {
  for (int d : {2, 3, 10, 100, 1000, 4096}) {
    double previous = log_normalizer(d, 0.0);
    for (double kappa = 1e-3; kappa <= 1e5; kappa *= 1.7) {
      const double value = log_normalizer(d, kappa);
      CAPTURE(d);
      CAPTURE(kappa);
      REQUIRE(std::isfinite(value));
      CHECK(value >= previous);
      previous = value;
    }
  }
}

TEST_CASE("vmf density integrates to one on S1 and S2") {
  for (double kappa : {0.0, 0.5, 5.0, 50.0}) {
    // S1: periodic trapezoid rule is spectrally accurate.
    const int n = 4096;
    double circle = 0.0;
    VmfParams p1{Vector::Unit(2, 0), kappa};
    for (int i = 0; i < n; ++i) {
      const double phi = 2.0 * std::numbers::pi * i / n;
      Vector x(2);
      x << std::cos(phi), std::sin(phi);
      circle += std::exp(vmf_log_density(p1, x));
    }
    circle *= 2.0 * std::numbers::pi / n;
    CHECK(std::abs(circle - 1.0) < 1e-4);

    // S2: integrate over the polar angle with composite Simpson.
    VmfParams p2{Vector::Unit(3, 2), kappa};
    const int m = 20000;
    double sphere = 0.0;
    for (int i = 0; i <= m; ++i) {
      const double t = std::numbers::pi * i / m;
      Vector x(3);
      x << std::sin(t), 0.0, std::cos(t);
      const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      sphere += w * std::exp(vmf_log_density(p2, x)) * std::sin(t);
    }
    sphere *= 2.0 * std::numbers::pi * (std::numbers::pi / m) / 3.0;
    CHECK(std::abs(sphere - 1.0) < 1e-4);
  }
}

TEST_CASE("estimator spot values") {
  using Kind = KappaRule::Kind;
  CHECK(estimate_kappa(0.1, 512, KappaRule::order(Kind::order0)).kappa == doctest::Approx(51.2));
  CHECK(estimate_kappa(0.5, 100, KappaRule::order(Kind::order0)).kappa == doctest::Approx(50.0));
  CHECK(estimate_kappa(0.5, 100, KappaRule::order(Kind::order_inf)).kappa ==
        doctest::Approx(200.0 / 3.0));
  CHECK(estimate_kappa(0.5, 100, KappaRule::order(Kind::order1)).kappa == doctest::Approx(62.5));
  for (auto kind : {Kind::order0, Kind::order1, Kind::order2, Kind::order3, Kind::order_inf,
                    Kind::exact}) {
    CHECK(estimate_kappa(0.0, 64, KappaRule::order(kind)).kappa == 0.0);
  }
}

TEST_CASE("exact inversion round-trips and estimators are ordered") {
  using Kind = KappaRule::Kind;
  const std::array kinds{Kind::order0, Kind::order1, Kind::order2, Kind::order3, Kind::order_inf};
  for (int d : {2, 3, 8, 64, 512}) {
    for (int i = 0; i < 100; ++i) {
      const double rbar = 0.999 * i / 99.0;
      const double kappa = estimate_kappa(rbar, d, KappaRule::order(Kind::exact)).kappa;
      CAPTURE(d);
      CAPTURE(rbar);
      CHECK(std::abs(bessel_ratio(d, kappa) - rbar) <= 1e-8);
      double previous = -1.0;
      for (auto kind : kinds) {
        const double value = estimate_kappa(rbar, d, KappaRule::order(kind)).kappa;
        CHECK(value >= previous);
        previous = value;
      }
    }
  }
}

TEST_CASE("saturation at rbar of one") {
  using Kind = KappaRule::Kind;
  const auto est = estimate_kappa(1.0, 10, KappaRule::order(Kind::exact), 1e4);
  CHECK(est.saturated);
  CHECK(est.kappa == 1e4);
  CHECK_FALSE(estimate_kappa(1.0, 10, KappaRule::order(Kind::order2)).saturated);
  CHECK_THROWS_AS(estimate_kappa(-0.1, 10, KappaRule::order(Kind::order0)), DomainError);
}

TEST_CASE("kappa rule names parse back") {
  using Kind = KappaRule::Kind;
  for (auto kind : {Kind::order0, Kind::order1, Kind::order2, Kind::order3, Kind::order_inf,
                    Kind::exact}) {
    CHECK(KappaRule::parse(KappaRule::order(kind).name()).kind == kind);
  }
  const auto c = KappaRule::parse("constant:12.5");
  CHECK(c.is_constant());
  CHECK(c.value == 12.5);
  CHECK_THROWS_AS(KappaRule::parse("order7"), DomainError);
}

TEST_CASE("fit_vmf recovers the generating parameters") {
  Rng rng(3);
  const Vector theta = testing::random_unit(5, rng);
  const Matrix draws = sample_vmf({theta, 30.0}, 20000, rng);
  const VmfFit fit = fit_vmf(draws);
  CHECK(fit.params.theta.dot(theta) > 0.999);
  CHECK(fit.params.kappa == doctest::Approx(30.0).epsilon(0.03));
}

TEST_CASE("sampler mean resultant length matches A_d") {
  Rng rng(5);
  for (int d : {2, 3, 16}) {
    for (double kappa : {0.5, 10.0, 200.0}) {
      const Vector theta = testing::random_unit(d, rng);
      const Matrix draws = sample_vmf({theta, kappa}, 40000, rng);
      for (Eigen::Index i = 0; i < draws.rows(); ++i) {
        REQUIRE(std::abs(draws.row(i).norm() - 1.0) < 1e-12);
      }
      const Vector mean = draws.colwise().mean().transpose();
      CAPTURE(d);
      CAPTURE(kappa);
      CHECK(std::abs(mean.dot(theta) - bessel_ratio(d, kappa)) < 0.01);
    }
  }
}

TEST_CASE("sampler is reproducible for a fixed seed") {
  Rng a(9), b(9);
  const Vector theta = Vector::Unit(4, 1);
  CHECK(sample_vmf({theta, 7.0}, 50, a) == sample_vmf({theta, 7.0}, 50, b));
}

TEST_CASE("uniform sphere draws have near-zero mean") {
  Rng rng(1);
  Vector sum = Vector::Zero(6);
  for (int i = 0; i < 20000; ++i) sum += sample_uniform_sphere(6, rng);
  CHECK((sum / 20000.0).norm() < 0.03);
}

TEST_CASE("tukey transform re-normalizes rows") {
  Matrix raw(2, 3);
  raw << 1.0, 4.0, 9.0, 0.0, 0.0, 16.0;
  const Matrix out = tukey_transform(raw, 0.5);
  Vector first(3);
  first << 1.0, 2.0, 3.0;
  CHECK((out.row(0).transpose() - first.normalized()).norm() < 1e-15);
  CHECK((out.row(1).transpose() - Vector::Unit(3, 2)).norm() < 1e-15);
  CHECK_THROWS_AS(tukey_transform(-raw, 0.5), DomainError);
  const Matrix logged = tukey_transform(raw, 0.0);
  CHECK(logged.row(0).norm() == doctest::Approx(1.0));
}

}  // namespace
}  // namespace vmfmil
