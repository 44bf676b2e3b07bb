#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <photonfilter/field.hpp>

using namespace photonfilter;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("coherent distribution", "[field]") {
  SECTION("vacuum") {
    auto d = PhotonDistribution::coherent(0.0);
    REQUIRE(d.p(0) == 1.0);
    REQUIRE(mean(d) == 0.0);
    REQUIRE(variance(d) == 0.0);
  }
  SECTION("Poissonian moments") {
    auto d = PhotonDistribution::coherent(25.0);
    REQUIRE(d.n_max() == 107);  // ceil(25 + 12*sqrt(26) + 20)
    REQUIRE_THAT(mean(d), WithinRel(25.0, 1e-12));
    REQUIRE_THAT(variance(d), WithinRel(25.0, 1e-10));
  }
  SECTION("mode sits at nbar-1 and nbar for integer nbar") {
    auto d = PhotonDistribution::coherent(100.0);
    REQUIRE_THAT(d.p(99), WithinRel(d.p(100), 1e-12));
    for (int n = 0; n <= d.n_max(); ++n) REQUIRE(d.p(n) <= d.p(100) * (1.0 + 1e-12));
  }
  SECTION("Q vanishes") {
    for (double nbar : {1.0, 10.0, 100.0})
      REQUIRE_THAT(q_parameter(PhotonDistribution::coherent(nbar)),
                   WithinAbs(0.0, 1e-10));
  }
  SECTION("large nbar does not underflow at n = 0") {
    auto d = PhotonDistribution::coherent(900.0);
    REQUIRE_THAT(mean(d), WithinRel(900.0, 1e-10));
  }
  SECTION("explicit cutoff and validation") {
    auto d = PhotonDistribution::coherent(4.0, 10);
    REQUIRE(d.n_max() == 10);
    REQUIRE_THROWS_AS(PhotonDistribution::coherent(-1.0), std::domain_error);
  }
}

TEST_CASE("thermal distribution", "[field]") {
  SECTION("vacuum") {
    auto d = PhotonDistribution::thermal(0.0);
    REQUIRE(d.p(0) == 1.0);
  }
  SECTION("nbar = 1 is the halving distribution") {
    auto d = PhotonDistribution::thermal(1.0);
    for (int n = 0; n <= 10; ++n)
      REQUIRE_THAT(d.p(n), WithinRel(std::pow(2.0, -(n + 1)), 1e-12));
  }
  SECTION("moments: var = nbar^2 + nbar, Q = nbar") {
    auto d5 = PhotonDistribution::thermal(5.0);
    REQUIRE_THAT(mean(d5), WithinRel(5.0, 1e-9));
    REQUIRE_THAT(variance(d5), WithinRel(30.0, 1e-9));
    REQUIRE_THAT(q_parameter(d5), WithinRel(5.0, 1e-8));
    REQUIRE_THAT(variance(PhotonDistribution::thermal(2.0)), WithinRel(6.0, 1e-9));
  }
  REQUIRE_THROWS_AS(PhotonDistribution::thermal(-0.1), std::domain_error);
}

TEST_CASE("fock distribution", "[field]") {
  auto d = PhotonDistribution::fock(3);
  REQUIRE(d.n_max() == 3);
  REQUIRE(d.p(3) == 1.0);
  REQUIRE(mean(d) == 3.0);
  REQUIRE(variance(d) == 0.0);
  REQUIRE_THAT(q_parameter(PhotonDistribution::fock(4)), WithinAbs(-1.0, 1e-15));
  REQUIRE_THROWS_AS(PhotonDistribution::fock(-1), std::domain_error);
  // vacuum has zero mean: Q undefined
  REQUIRE_THROWS_AS(q_parameter(PhotonDistribution::fock(0)), std::domain_error);
}

TEST_CASE("generator invariants: normalization and tail bound", "[field][property]") {
  for (double nbar : {0.5, 1.0, 10.0, 100.0}) {
    for (auto d : {PhotonDistribution::coherent(nbar), PhotonDistribution::thermal(nbar)}) {
      detail::StableSum s;
      for (int n = 0; n <= d.n_max(); ++n) s.add(d.p(n));
      REQUIRE_THAT(s.value(), WithinAbs(1.0, 1e-12));
      REQUIRE(d.tail_mass_bound() < 1e-10);
      REQUIRE(d.tail_mass_bound() >= 0.0);
    }
  }
}

TEST_CASE("moments match extended-precision accumulation", "[field][property]") {
  auto d = PhotonDistribution::coherent(10.0);
  long double mu = 0.0L, m2 = 0.0L;
  for (int n = 0; n <= d.n_max(); ++n) mu += static_cast<long double>(n) * d.p(n);
  for (int n = 0; n <= d.n_max(); ++n)
    m2 += (n - mu) * (n - mu) * static_cast<long double>(d.p(n));
  REQUIRE_THAT(mean(d), WithinRel(static_cast<double>(mu), 1e-12));
  REQUIRE_THAT(variance(d), WithinRel(static_cast<double>(m2), 1e-10));
}

TEST_CASE("normalizing constructor", "[field]") {
  PhotonDistribution d(std::vector<double>{2.0, 2.0});
  REQUIRE(d.p(0) == 0.5);
  REQUIRE(d.p(1) == 0.5);
  REQUIRE(d.p(7) == 0.0);  // beyond support
  REQUIRE_THROWS_AS(PhotonDistribution(std::vector<double>{}), std::domain_error);
  REQUIRE_THROWS_AS(PhotonDistribution(std::vector<double>{1.0, -0.2}), std::domain_error);
  REQUIRE_THROWS_AS(PhotonDistribution(std::vector<double>{0.0, 0.0}), std::domain_error);
}

TEST_CASE("FWHM by linear interpolation", "[field][fwhm]") {
  SECTION("single-bin spike at the support edge is sub-bin wide") {
    FwhmEstimate f = fwhm_numeric(PhotonDistribution::fock(5));
    REQUIRE(f.left == 4.5);
    REQUIRE(f.right == 5.0);  // peak is the last bin; crossing clamps there
    REQUIRE(f.width < 1.0);
    REQUIRE_FALSE(f.multimodal);
  }
  SECTION("single-bin spike mid-support spans one bin") {
    PhotonDistribution d(std::vector<double>{0.0, 0.0, 1.0, 0.0, 0.0});
    FwhmEstimate f = fwhm_numeric(d);
    REQUIRE(f.left == 1.5);
    REQUIRE(f.right == 2.5);
    REQUIRE(f.width == 1.0);
  }
  SECTION("coherent widths near sqrt(8 nbar ln 2)") {
    FwhmEstimate f = fwhm_numeric(PhotonDistribution::coherent(19.8));
    REQUIRE_THAT(f.width, WithinRel(10.496056250989945, 1e-9));
    REQUIRE_THAT(f.width, WithinRel(std::sqrt(8.0 * 19.8 * std::numbers::ln2), 0.05));

    FwhmEstimate f100 = fwhm_numeric(PhotonDistribution::coherent(100.0));
    REQUIRE_THAT(f100.width, WithinRel(23.570124975159814, 1e-9));
    REQUIRE_THAT(f100.width, WithinRel(std::sqrt(800.0 * std::numbers::ln2), 0.05));
    REQUIRE_FALSE(f100.multimodal);
  }
  SECTION("multimodal flag with crossings bracketing the global maximum") {
    PhotonDistribution d(std::vector<double>{0.05, 1.0, 0.05, 0.9, 0.05});
    FwhmEstimate f = fwhm_numeric(d);
    REQUIRE(f.multimodal);
    REQUIRE(f.left > 0.0);
    REQUIRE(f.left < 1.0);
    REQUIRE(f.right > 1.0);
    REQUIRE(f.right < 2.0);
  }
  SECTION("clamps at a support edge") {
    FwhmEstimate f = fwhm_numeric(PhotonDistribution::thermal(5.0));
    REQUIRE(f.left == 0.0);  // maximum at n = 0, no left crossing
    REQUIRE(f.right > 0.0);
  }
}

TEST_CASE("distribution serialization", "[field][io]") {
  auto d = PhotonDistribution::coherent(2.0, 12);
  SECTION("CSV layout") {
    std::ostringstream os;
    write_csv(d, os);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    REQUIRE(line == "n,p_n");
    int rows = 0;
    while (std::getline(is, line)) {
      REQUIRE(line.find(',') != std::string::npos);
      ++rows;
    }
    REQUIRE(rows == d.n_max() + 1);
  }
  SECTION("JSON round trip") {
    nlohmann::json j = to_json(d);
    REQUIRE(j.at("n_max") == 12);
    REQUIRE(j.at("probs").size() == 13);
    REQUIRE(j.at("tail_mass_bound").get<double>() >= 0.0);
    PhotonDistribution back = distribution_from_json(j);
    REQUIRE(back.n_max() == d.n_max());
    for (int n = 0; n <= d.n_max(); ++n) REQUIRE(back.p(n) == d.p(n));
  }
  SECTION("bad documents") {
    REQUIRE_THROWS_AS(distribution_from_json(nlohmann::json{{"n_max", 2}}),
                      std::invalid_argument);
    nlohmann::json j = to_json(d);
    j["n_max"] = 5;
    REQUIRE_THROWS_AS(distribution_from_json(j), std::invalid_argument);
  }
}
