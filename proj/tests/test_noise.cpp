#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "ionsim/io.hpp"
#include "ionsim/noise.hpp"

using namespace ionsim;
constexpr double kPi = std::numbers::pi;

namespace {

double mean_of(const ShotRecord& r) {
  double s = 0.0;
  for (auto b : r.outcomes) s += b;
  return s / static_cast<double>(r.size());
}

}  // namespace

TEST_CASE("bernoulli sampling") {
  SUBCASE("p = 0 gives all zeros, p = 1 all ones") {
    ShotRecord z = sample_shots(0.0, 1000, 1);
    ShotRecord o = sample_shots(1.0, 1000, 1);
    CHECK(mean_of(z) == 0.0);
    CHECK(mean_of(o) == 1.0);
  }
  SUBCASE("p = 0.5 sample mean within 3 sigma at 1e5 draws") {
    ShotRecord r = sample_shots(0.5, 100000, 99);
    CHECK(std::abs(mean_of(r) - 0.5) < 0.005);
  }
  SUBCASE("same seed reproduces identical outcomes") {
    ShotRecord a = sample_shots(0.37, 5000, 123456);
    ShotRecord b = sample_shots(0.37, 5000, 123456);
    CHECK(a.outcomes == b.outcomes);
    ShotRecord c = sample_shots(0.37, 5000, 123457);
    CHECK(a.outcomes != c.outcomes);
  }
  SUBCASE("contract checks") {
    CHECK_THROWS_AS(sample_shots(-0.1, 10, 0), std::invalid_argument);
    CHECK_THROWS_AS(sample_shots(0.5, 0, 0), std::invalid_argument);
  }
}

TEST_CASE("bin means") {
  SUBCASE("all ones") {
    ShotRecord r;
    r.outcomes.assign(100, 1);
    for (double m : bin_means(r, 10)) CHECK(m == 1.0);
  }
  SUBCASE("strict alternation at N_b = 4 gives 0.5 everywhere") {
    ShotRecord r;
    for (int i = 0; i < 64; ++i) r.outcomes.push_back(i % 2);
    for (double m : bin_means(r, 4)) CHECK(m == 0.5);
  }
  SUBCASE("mean of bin means equals the retained-prefix mean") {
    ShotRecord r = sample_shots(0.3, 1003, 7);  // trailing partial bin dropped
    long long nb = 10;
    auto means = bin_means(r, nb);
    double mm = 0.0;
    for (double m : means) mm += m;
    mm /= static_cast<double>(means.size());
    double prefix = 0.0;
    long long kept = nb * static_cast<long long>(means.size());
    for (long long i = 0; i < kept; ++i) prefix += r.outcomes[i];
    prefix /= static_cast<double>(kept);
    CHECK(std::abs(mm - prefix) < 1e-12);
  }
  SUBCASE("range contract 2 < N_b < M/2") {
    ShotRecord r;
    r.outcomes.assign(100, 0);
    CHECK_THROWS_AS(bin_means(r, 2), std::invalid_argument);
    CHECK_THROWS_AS(bin_means(r, 50), std::invalid_argument);
    CHECK_NOTHROW(bin_means(r, 49));
    CHECK_NOTHROW(bin_means(r, 3));
  }
}

TEST_CASE("allan variance") {
  SUBCASE("constant bins give zero") {
    CHECK(allan_variance({0.4, 0.4, 0.4, 0.4}) == 0.0);
  }
  SUBCASE("alternating bin means give sigma^2 = 1/2") {
    std::vector<double> alt;
    for (int i = 0; i < 101; ++i) alt.push_back(i % 2);
    CHECK(allan_variance(alt) == std::sqrt(0.5));
  }
  SUBCASE("iid bins estimate their variance") {
    // bins ~ Bernoulli(0.5) themselves (N_b irrelevant here): variance 0.25
    ShotRecord r = sample_shots(0.5, 4000, 31337);
    std::vector<double> raw(r.outcomes.begin(), r.outcomes.end());
    double sigma = allan_variance(raw);
    // relative standard error of sigma^2 is ~ sqrt(3/K); 5 sigma margin
    CHECK(std::abs(sigma * sigma - 0.25) < 5.0 * std::sqrt(3.0 / 4000.0) * 0.25);
  }
  SUBCASE("needs two bins") {
    CHECK_THROWS_AS(allan_variance({1.0}), std::invalid_argument);
  }
}

TEST_CASE("expected Allan variance of Bernoulli shots is p(1-p)/N_b") {
  ShotRecord r = sample_shots(0.5, 100000, 2024);
  for (long long nb : {4, 10, 50, 200}) {
    auto means = bin_means(r, nb);
    double sigma2 = std::pow(allan_variance(means), 2);
    double expect = 0.25 / static_cast<double>(nb);
    double rse = std::sqrt(3.0 / static_cast<double>(means.size() - 1));
    CHECK(std::abs(sigma2 - expect) < 5.0 * rse * expect);
  }
}

TEST_CASE("fringe slope") {
  SUBCASE("extremum has zero slope") {
    InterferometerConfig cfg = InterferometerConfig::defaults(2);
    CHECK(fringe_slope(cfg, 0.0) == 0.0);
  }
  SUBCASE("n=1, C=1 maximum slope is 1/2") {
    InterferometerConfig cfg = InterferometerConfig::defaults(1);
    CHECK(std::abs(fringe_slope(cfg, kPi / 2.0) - 0.5) < 1e-14);
  }
  SUBCASE("n=3, C=1 at phi=pi/6 gives 3/2") {
    InterferometerConfig cfg = InterferometerConfig::defaults(3);
    CHECK(std::abs(fringe_slope(cfg, kPi / 6.0) - 1.5) < 1e-12);
  }
  SUBCASE("finite differences of the simulated fringe agree") {
    for (int n : {1, 2}) {
      InterferometerConfig cfg = InterferometerConfig::defaults(n);
      cfg.contrast = 0.85;
      for (double phi : {0.4, 1.1}) {
        double h = 1e-5;
        auto p = [&](double x) {
          return apply_contrast(run_point(cfg, x / cfg.delta_omega_z), cfg.contrast);
        };
        double fd = (p(phi + h) - p(phi - h)) / (2.0 * h);
        CHECK(std::abs(fd - fringe_slope(cfg, phi)) < 1e-6);
      }
    }
  }
}

TEST_CASE("sensitivity") {
  CHECK(sensitivity(0.5, 0.5) == 1.0);
  CHECK(sensitivity(0.5, 1.0) == 0.5);
  CHECK(sensitivity(0.0, 0.7) == 0.0);
  CHECK(sensitivity(0.5, -0.5) == 1.0);  // |slope|
  CHECK_THROWS_AS(sensitivity(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("sql curve") {
  CHECK(sql_curve(1) == 1.0);
  CHECK(std::abs(sql_curve(100) - 0.1) < 1e-15);
  CHECK(std::abs(sql_curve(64) - 2.0 * sql_curve(256)) < 1e-15);
  CHECK_THROWS_AS(sql_curve(0), std::invalid_argument);
}

TEST_CASE("allan scan") {
  SUBCASE("ideal n=1 run tracks the SQL within 15% (fixed seed)") {
    InterferometerConfig cfg = InterferometerConfig::defaults(1);
    double t_op = (kPi / 2.0) / cfg.delta_omega_z;
    ShotRecord rec = sample_operating_point(cfg, t_op, 10000, 20020);
    CHECK(std::abs(rec.p - 0.5) < 1e-9);
    AllanResult res = allan_scan(rec, cfg, {4, 8, 16, 32, 64, 128, 256});
    CHECK(std::abs(res.slope_used - 0.5) < 1e-9);
    for (const auto& row : res.rows)
      CHECK(std::abs(row.delta_phi / sql_curve(row.n_b) - 1.0) < 0.15);
  }
  SUBCASE("n = 2 halves delta_phi at the matched operating point") {
    InterferometerConfig c1 = InterferometerConfig::defaults(1);
    InterferometerConfig c2 = InterferometerConfig::defaults(2);
    ShotRecord r1 =
        sample_operating_point(c1, (kPi / 2.0) / c1.delta_omega_z, 20000, 5150);
    ShotRecord r2 =
        sample_operating_point(c2, (kPi / 4.0) / c2.delta_omega_z, 20000, 5151);
    AllanResult a1 = allan_scan(r1, c1, {8, 16, 32});
    AllanResult a2 = allan_scan(r2, c2, {8, 16, 32});
    for (std::size_t i = 0; i < a1.rows.size(); ++i) {
      double ratio = a2.rows[i].delta_phi / a1.rows[i].delta_phi;
      CHECK(std::abs(ratio - 0.5) < 0.1);
    }
  }
  SUBCASE("contrast trade-off: C3 * 3 = C2 * 2 equalizes the n=2 and n=3 scans") {
    InterferometerConfig c2 = InterferometerConfig::defaults(2);
    c2.contrast = 0.9;
    InterferometerConfig c3 = InterferometerConfig::defaults(3);
    c3.contrast = 0.9 * 2.0 / 3.0;
    ShotRecord r2 =
        sample_operating_point(c2, (kPi / 4.0) / c2.delta_omega_z, 20000, 808);
    ShotRecord r3 =
        sample_operating_point(c3, (kPi / 6.0) / c3.delta_omega_z, 20000, 809);
    AllanResult a2 = allan_scan(r2, c2, {8, 16, 32});
    AllanResult a3 = allan_scan(r3, c3, {8, 16, 32});
    CHECK(std::abs(a2.slope_used - a3.slope_used) < 1e-12);  // slopes match exactly
    for (std::size_t i = 0; i < a2.rows.size(); ++i) {
      double ratio = a3.rows[i].delta_phi / a2.rows[i].delta_phi;
      CHECK(std::abs(ratio - 1.0) < 0.15);  // statistical agreement
    }
  }
  SUBCASE("zero-variance record gives zero sensitivity") {
    ShotRecord rec;
    rec.outcomes.assign(1000, 1);
    rec.operating_phi = kPi / 2.0;
    rec.order = 1;
    rec.contrast = 1.0;
    InterferometerConfig cfg = InterferometerConfig::defaults(1);
    AllanResult res = allan_scan(rec, cfg, {4, 8});
    for (const auto& row : res.rows) CHECK(row.delta_phi == 0.0);
  }
  SUBCASE("relabeling 0<->1 with the reflected operating point is invariant") {
    InterferometerConfig cfg = InterferometerConfig::defaults(1);
    ShotRecord rec = sample_operating_point(cfg, (kPi / 2.0) / cfg.delta_omega_z, 5000, 64);
    ShotRecord flipped = rec;
    for (auto& b : flipped.outcomes) b = 1 - b;
    flipped.operating_phi = kPi - rec.operating_phi;  // |sin| preserved
    AllanResult a = allan_scan(rec, cfg, {4, 16});
    AllanResult b = allan_scan(flipped, cfg, {4, 16});
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].sigma == b.rows[i].sigma);
      CHECK(std::abs(a.rows[i].delta_phi - b.rows[i].delta_phi) < 1e-15);
    }
  }
  SUBCASE("scan is deterministic") {
    InterferometerConfig cfg = InterferometerConfig::defaults(1);
    ShotRecord rec = sample_operating_point(cfg, (kPi / 2.0) / cfg.delta_omega_z, 4000, 11);
    AllanResult a = allan_scan(rec, cfg, {4, 8, 16});
    AllanResult b = allan_scan(rec, cfg, {4, 8, 16});
    CHECK(allan_csv(a, true) == allan_csv(b, true));
  }
}

TEST_CASE("allan CSV and shot-record text") {
  AllanResult res;
  res.slope_used = 0.5;
  res.rows = {{4, 0.25, 0.5}, {16, 0.125, 0.25}};
  std::string csv = allan_csv(res, true, "cfg");
  CHECK(csv.find("# cfg\n") == 0);
  CHECK(csv.find("N_b,sigma,delta_phi,sql_delta_phi\n") != std::string::npos);
  CHECK(csv.find("4,0.25,0.5,0.5\n") != std::string::npos);
  std::string csv3 = allan_csv(res, false);
  CHECK(csv3.find("N_b,sigma,delta_phi\n") == 0);

  ShotRecord rec;
  rec.outcomes = {1, 0, 1, 1};
  CHECK(format_shot_record_text(rec) == "1011\n");
}
