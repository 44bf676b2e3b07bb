#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <photonfilter/filtering.hpp>

using namespace photonfilter;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
// v = pi*g0^2/lambda = 0.126 with g0 = 1
const LZParams kLz126{1.0, std::numbers::pi / 0.126};
constexpr double kV = 0.126;
}  // namespace

TEST_CASE("parse_sequence", "[filtering]") {
  SECTION("explicit outcome strings") {
    auto seq = parse_sequence("--+-");
    REQUIRE(seq == MeasurementSequence{Outcome::Minus, Outcome::Minus, Outcome::Plus,
                                       Outcome::Minus});
    REQUIRE(parse_sequence("−−+−") == seq);  // typographic minus
    REQUIRE(parse_sequence(" -+ ") == MeasurementSequence{Outcome::Minus, Outcome::Plus});
    REQUIRE(parse_sequence("").empty());
  }
  SECTION("mN shorthand") {
    auto seq = parse_sequence("m25");
    REQUIRE(seq.size() == 25);
    for (Outcome o : seq) REQUIRE(o == Outcome::Minus);
    REQUIRE(parse_sequence("m0").empty());
    REQUIRE(parse_sequence("M3").size() == 3);
  }
  SECTION("rejects malformed input") {
    REQUIRE_THROWS_AS(parse_sequence("x"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_sequence("m"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_sequence("m12x"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_sequence("m99999999"), std::invalid_argument);
  }
  SECTION("round trip through sequence_to_string") {
    REQUIRE(sequence_to_string(parse_sequence("--+-")) == "--+-");
    REQUIRE(parse_sequence(sequence_to_string(parse_sequence("m4"))).size() == 4);
  }
}

TEST_CASE("FilterTable", "[filtering]") {
  FilterTable t(std::vector<double>{1.0, 0.5, 0.25});
  REQUIRE(t.max_family() == 2);
  REQUIRE(t.survival(0) == 1.0);
  REQUIRE(t.transfer(0) == 0.0);
  REQUIRE(t.transfer(2) == 0.75);
  REQUIRE_THROWS_AS(t.survival(3), std::out_of_range);
  REQUIRE_THROWS_AS(t.survival(-1), std::out_of_range);

  REQUIRE_THROWS_AS(FilterTable(std::vector<double>{}), std::domain_error);
  REQUIRE_THROWS_AS(FilterTable(std::vector<double>{0.9}), std::domain_error);
  REQUIRE_THROWS_AS(FilterTable(std::vector<double>{1.0, 1.2}), std::domain_error);
  REQUIRE_THROWS_AS(FilterTable(std::vector<double>{1.0, -0.1}), std::domain_error);

  SECTION("analytic table matches the filter function") {
    auto ft = FilterTable::analytic(kLz126, 8);
    REQUIRE(ft.max_family() == 8);
    for (int k = 0; k <= 8; ++k)
      REQUIRE_THAT(ft.survival(k), WithinRel(std::exp(-kV * k), 1e-14));
  }
}

TEST_CASE("single projection steps, lower-level atom", "[filtering]") {
  SECTION("Minus on vacuum is certain") {
    auto r = apply_outcome(PhotonDistribution::fock(0), kLz126, Outcome::Minus,
                           AtomInjectionCase::CaseA);
    REQUIRE(r.step_prob == 1.0);
    REQUIRE(r.dist.p(0) == 1.0);
  }
  SECTION("Plus on vacuum cannot happen") {
    REQUIRE_THROWS_AS(apply_outcome(PhotonDistribution::fock(0), kLz126, Outcome::Plus,
                                    AtomInjectionCase::CaseA),
                      impossible_outcome_error);
  }
  SECTION("Minus keeps a coherent state coherent with reduced mean") {
    auto in = PhotonDistribution::coherent(10.0);
    auto r = apply_outcome(in, kLz126, Outcome::Minus, AtomInjectionCase::CaseA);
    // step probability exp(nbar*(e^-v - 1))
    REQUIRE_THAT(r.step_prob, WithinRel(0.3060975208647947, 1e-12));
    REQUIRE_THAT(mean(r.dist), WithinRel(10.0 * std::exp(-kV), 1e-10));
    auto closed = lz_minus_closed_form(10.0, kV, 1, in.n_max());
    for (int n = 0; n <= in.n_max(); ++n)
      REQUIRE_THAT(r.dist.p(n), WithinAbs(closed.p(n), 1e-13));
  }
  SECTION("Plus shifts the support down and lowers the mean") {
    auto in = PhotonDistribution::coherent(10.0);
    auto r = apply_outcome(in, kLz126, Outcome::Plus, AtomInjectionCase::CaseA);
    REQUIRE_THAT(r.step_prob, WithinRel(0.6939024791352052, 1e-12));
    REQUIRE(r.dist.n_max() == in.n_max() - 1);
    REQUIRE_THAT(mean(r.dist), WithinRel(9.522226148434534, 1e-9));
    REQUIRE_THAT(mean(r.dist), WithinRel(lz_upper_mean(10.0, kV), 1e-9));
  }
  SECTION("the two outcomes exhaust the possibilities") {
    auto in = PhotonDistribution::coherent(7.0);
    LZParams lz{1.0, std::numbers::pi / 0.3};  // v = 0.3
    auto rm = apply_outcome(in, lz, Outcome::Minus, AtomInjectionCase::CaseA);
    auto rp = apply_outcome(in, lz, Outcome::Plus, AtomInjectionCase::CaseA);
    REQUIRE_THAT(rm.step_prob + rp.step_prob, WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("single projection steps, upper-level atom", "[filtering]") {
  auto one = PhotonDistribution::fock(1);
  double s2 = std::exp(-2.0 * kV);  // survival of family n = 2
  SECTION("Plus reweights by the family above") {
    auto r = apply_outcome(one, kLz126, Outcome::Plus, AtomInjectionCase::CaseB);
    REQUIRE_THAT(r.step_prob, WithinRel(s2, 1e-13));
    REQUIRE(r.dist.p(1) == 1.0);
  }
  SECTION("Minus deposits a photon: support grows") {
    auto r = apply_outcome(one, kLz126, Outcome::Minus, AtomInjectionCase::CaseB);
    REQUIRE_THAT(r.step_prob, WithinRel(1.0 - s2, 1e-13));
    REQUIRE(r.dist.n_max() == 2);
    REQUIRE(r.dist.p(2) == 1.0);
  }
  SECTION("Minus on vacuum seeds the one-photon state") {
    auto r = apply_outcome(PhotonDistribution::fock(0), kLz126, Outcome::Minus,
                           AtomInjectionCase::CaseB);
    REQUIRE_THAT(r.step_prob, WithinRel(1.0 - std::exp(-kV), 1e-13));
    REQUIRE(r.dist.p(1) == 1.0);
  }
  SECTION("completeness") {
    auto rp = apply_outcome(one, kLz126, Outcome::Plus, AtomInjectionCase::CaseB);
    auto rm = apply_outcome(one, kLz126, Outcome::Minus, AtomInjectionCase::CaseB);
    REQUIRE_THAT(rp.step_prob + rm.step_prob, WithinAbs(1.0, 1e-14));
  }
}

TEST_CASE("sequence application", "[filtering]") {
  SECTION("empty sequence is the identity") {
    auto in = PhotonDistribution::coherent(3.0);
    auto fs = apply_sequence(in, kLz126, {}, AtomInjectionCase::CaseA);
    REQUIRE(fs.steps == 0);
    REQUIRE(fs.log_success_prob == 0.0);
    for (int n = 0; n <= in.n_max(); ++n) REQUIRE(fs.dist.p(n) == in.p(n));
  }
  SECTION("25 lower-level detections reproduce the closed form") {
    auto in = PhotonDistribution::coherent(10.0);
    auto fs = apply_sequence(in, kLz126, parse_sequence("m25"), AtomInjectionCase::CaseA);
    REQUIRE(fs.steps == 25);
    REQUIRE_THAT(fs.log_success_prob, WithinRel(10.0 * std::expm1(-kV * 25), 1e-12));
    REQUIRE_THAT(fs.log_success_prob, WithinRel(-9.571478731329597, 1e-12));
    auto closed = lz_minus_closed_form(10.0, kV, 25, fs.dist.n_max());
    for (int n = 0; n <= fs.dist.n_max(); ++n)
      REQUIRE_THAT(fs.dist.p(n), WithinAbs(closed.p(n), 1e-12));
  }
  SECTION("oscillatory filter sharpens a coherent state onto its maximum") {
    // DK with g0=4, T=0.1 has a filter maximum at n=25; 25 lower-level
    // detections on coherent(25) pile up there and drive Q deep below 0.
    auto in = PhotonDistribution::coherent(25.0);
    DKParams dk{4.0, 0.1, 0.1};
    auto fs = apply_sequence(in, dk, parse_sequence("m25"), AtomInjectionCase::CaseA);
    int argmax = 0;
    for (int n = 1; n <= fs.dist.n_max(); ++n)
      if (fs.dist.p(n) > fs.dist.p(argmax)) argmax = n;
    REQUIRE(argmax == 25);
    REQUIRE_THAT(q_parameter(fs.dist), WithinRel(-0.95186130701278115, 1e-9));
    REQUIRE_THAT(fs.log_success_prob, WithinRel(-1.5485072844916961, 1e-9));
    REQUIRE_THAT(mean(fs.dist), WithinRel(25.011049613939338, 1e-9));
  }
  SECTION("outcomes do not commute for a non-exponential filter") {
    auto in = PhotonDistribution::coherent(5.0);
    DKParams dk{4.0, 0.1, 0.1};
    auto pm = apply_sequence(in, dk, parse_sequence("+-"), AtomInjectionCase::CaseA);
    auto mp = apply_sequence(in, dk, parse_sequence("-+"), AtomInjectionCase::CaseA);
    REQUIRE(std::abs(mean(pm.dist) - mean(mp.dist)) > 1e-6);
  }
  SECTION("the exponential filter commutes up to the record probability") {
    // survival(n+1) = e^-v survival(n), so reordering '+' and '-' leaves the
    // conditional state invariant and scales the record probability by e^-v.
    auto in = PhotonDistribution::coherent(5.0);
    auto pm = apply_sequence(in, kLz126, parse_sequence("+-"), AtomInjectionCase::CaseA);
    auto mp = apply_sequence(in, kLz126, parse_sequence("-+"), AtomInjectionCase::CaseA);
    REQUIRE(pm.dist.n_max() == mp.dist.n_max());
    for (int n = 0; n <= pm.dist.n_max(); ++n)
      REQUIRE_THAT(pm.dist.p(n), WithinAbs(mp.dist.p(n), 1e-13));
    REQUIRE_THAT(mp.log_success_prob - pm.log_success_prob,
                 WithinAbs(-kLz126.v(), 1e-12));
  }
  SECTION("renormalized at every step") {
    auto in = PhotonDistribution::thermal(4.0);
    auto fs = apply_sequence(in, kLz126, parse_sequence("-+--"), AtomInjectionCase::CaseA);
    detail::StableSum s;
    for (double p : fs.dist.probs()) s.add(p);
    REQUIRE_THAT(s.value(), WithinAbs(1.0, 1e-12));
    REQUIRE(fs.log_success_prob < 0.0);
  }
  SECTION("underflowing sequences are reported, not silently zeroed") {
    LZParams strong{1.0, std::numbers::pi / 30.0};  // v = 30
    REQUIRE_THROWS_AS(apply_sequence(PhotonDistribution::fock(30), strong,
                                     parse_sequence("m2"), AtomInjectionCase::CaseA),
                      impossible_outcome_error);
  }
}

TEST_CASE("closed-form helpers validate their inputs", "[filtering]") {
  REQUIRE_THROWS_AS(lz_minus_closed_form(-1.0, 0.1, 1), std::domain_error);
  REQUIRE_THROWS_AS(lz_minus_closed_form(1.0, 0.0, 1), std::domain_error);
  REQUIRE_THROWS_AS(lz_minus_closed_form(1.0, 0.1, -1), std::domain_error);
  REQUIRE_THROWS_AS(lz_upper_mean(0.0, 0.1), std::domain_error);
  REQUIRE_THROWS_AS(lz_upper_mean(1.0, -0.1), std::domain_error);
}

TEST_CASE("upper-level detection lowers the mean below nbar", "[filtering]") {
  // The conditioned mean <n>_+ stays below nbar for every (nbar, v):
  // detecting the atom in its upper level removes a photon more often than
  // the reweighting favors large n.
  REQUIRE_THAT(lz_upper_mean(100.0, 0.01), WithinRel(99.58366643537063, 1e-12));
  REQUIRE(std::abs(lz_upper_mean(100.0, 0.01) - 99.0) < 0.6);
  REQUIRE_THAT(lz_upper_mean(2.0, 5.0), WithinRel(1.315815066842319, 1e-12));
  for (double nbar : {0.5, 2.0, 10.0, 200.0})
    for (double v : {0.01, 0.126, 1.0, 5.0})
      REQUIRE(lz_upper_mean(nbar, v) < nbar);
}

TEST_CASE("filtered-state serialization", "[filtering][io]") {
  auto fs = apply_sequence(PhotonDistribution::coherent(4.0, 20), kLz126,
                           parse_sequence("m3"), AtomInjectionCase::CaseA);
  SECTION("CSV carries a commented JSON header") {
    std::ostringstream os;
    write_csv(fs, os);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    REQUIRE(line.rfind("# ", 0) == 0);
    auto j = nlohmann::json::parse(line.substr(2));
    REQUIRE(j.at("steps") == 3);
    REQUIRE(j.at("log_success_prob").get<double>() == fs.log_success_prob);
    REQUIRE(std::getline(is, line));
    REQUIRE(line == "n,p_n");
  }
  SECTION("JSON document") {
    auto j = to_json(fs);
    REQUIRE(j.at("steps") == 3);
    REQUIRE(j.at("dist").at("probs").size() == 21);
    auto back = distribution_from_json(j.at("dist"));
    REQUIRE_THAT(mean(back), WithinRel(mean(fs.dist), 1e-14));
  }
}
