#include "zevsim/equity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "test_data.hpp"
#include "zevsim/error.hpp"
#include "zevsim/io.hpp"

using namespace zevsim;

namespace {

std::vector<TractProfile> bundled_tracts() { return load_tracts(test::data_dir() / "tracts" / "houston-tracts.csv"); }

TractProfile tract(std::string id, double income, double edu, double poverty, double renter, double cars,
                   double chargers, double cost, double incentive) {
  return {std::move(id), income, edu, poverty, renter, cars, chargers, cost, incentive};
}

std::vector<std::size_t> argsort(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  return idx;
}

// Month-by-month balance schedule; the payment is found by bisection.
double spreadsheet_annual_payment(double principal, double apr, int months) {
  auto remaining = [&](double payment) {
    double balance = principal;
    for (int m = 0; m < months; ++m) balance = balance * (1 + apr / 12) - payment;
    return balance;
  };
  double lo = 0.0, hi = principal;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (remaining(mid) > 0 ? lo : hi) = mid;
  }
  return 12.0 * 0.5 * (lo + hi);
}

double parse_exact(const std::string& s) {
  double v = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

}  // namespace

TEST_CASE("normalize_indicator") {
  const std::vector<double> v{0, 5, 10};
  CHECK(normalize_indicator(v, Direction::BarrierIncreasing).values == std::vector<double>{0, 0.5, 1});
  CHECK(normalize_indicator(v, Direction::BarrierDecreasing).values == std::vector<double>{1, 0.5, 0});
  const auto flat = normalize_indicator(std::vector<double>{3, 3, 3}, Direction::BarrierIncreasing);
  CHECK(flat.degenerate);
  CHECK(flat.values == std::vector<double>{0.5, 0.5, 0.5});
  CHECK_THROWS_AS(normalize_indicator(std::vector<double>{}, Direction::BarrierIncreasing), Error);
  CHECK_THROWS_AS(normalize_indicator(std::vector<double>{1.0, NAN}, Direction::BarrierIncreasing), Error);
}

TEST_CASE("compute_equity_index basics") {
  SUBCASE("identical tracts score identically") {
    const std::vector<TractProfile> ts{tract("a", 50000, .3, .1, .5, .4, 1, 50000, 0),
                                       tract("b", 50000, .3, .1, .5, .4, 1, 50000, 0),
                                       tract("c", 90000, .6, .05, .3, .2, 3, 48000, 500)};
    const auto idx = compute_equity_index(ts);
    CHECK(idx.scores[0].index == idx.scores[1].index);
    CHECK(idx.scores[0].internal == idx.scores[1].internal);
  }
  SUBCASE("dominating tract has the higher index") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> f(0.05, 0.9), bump(0.0, 0.05);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<TractProfile> ts;
      for (int i = 0; i < 6; ++i)
        ts.push_back(tract("t" + std::to_string(i), 40000 + 1000 * i, f(rng), f(rng), f(rng), f(rng), 5 * f(rng),
                           40000 + 20000 * f(rng), 1000 * f(rng)));
      auto a = ts[0];
      a.tract_id = "dominant";
      a.poverty_rate = std::min(1.0, a.poverty_rate + bump(rng));
      a.renter_rate = std::min(1.0, a.renter_rate + bump(rng));
      a.sub_two_car_rate = std::min(1.0, a.sub_two_car_rate + bump(rng));
      a.ev_cost_index += 1000 * bump(rng);
      a.educational_attainment = std::max(0.0, a.educational_attainment - bump(rng));
      a.charger_access = std::max(0.0, a.charger_access - bump(rng));
      a.incentive_usd = std::max(0.0, a.incentive_usd - 100 * bump(rng));
      ts.push_back(a);
      const auto idx = compute_equity_index(ts);
      CHECK(idx.scores.back().index >= idx.scores.front().index);
    }
  }
  SUBCASE("scores stay in bounds") {
    for (const auto& s : compute_equity_index(bundled_tracts()).scores) {
      CHECK(s.index >= 0.0);
      CHECK(s.index <= 1.0);
      CHECK(s.internal >= 0.0);
      CHECK(s.external <= 1.0);
    }
  }
  SUBCASE("errors") {
    try {
      compute_equity_index({});
      FAIL("expected EmptyTractSet");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::EmptyTractSet);
    }
    EquityWeights w;
    w.internal[1] = -1.0;
    try {
      compute_equity_index(bundled_tracts(), w);
      FAIL("expected NegativeWeight");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NegativeWeight);
    }
  }
}

TEST_CASE("ranking is invariant under positive affine rescaling of any indicator") {
  const auto base = bundled_tracts();
  const auto reference = compute_equity_index(base);
  std::vector<double> ref_index;
  for (const auto& s : reference.scores) ref_index.push_back(s.index);

  // Fraction columns are rescaled within [0,1] so the tract invariants still hold.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> scale(0.5, 0.9), shift(0.0, 0.05);
  for (int col = 0; col < 7; ++col) {
    auto ts = base;
    const double a = scale(rng);
    const double b = shift(rng);
    for (auto& t : ts) {
      double* fields[] = {&t.educational_attainment, &t.poverty_rate, &t.renter_rate, &t.sub_two_car_rate,
                          &t.charger_access, &t.ev_cost_index, &t.incentive_usd};
      *fields[col] = a * *fields[col] + b;
    }
    std::vector<double> idx;
    for (const auto& s : compute_equity_index(ts).scores) idx.push_back(s.index);
    // Equal up to rounding; compare ranks only where the reference separates tracts.
    const auto ra = argsort(ref_index);
    for (std::size_t i = 0; i + 1 < ra.size(); ++i) {
      if (ref_index[ra[i + 1]] - ref_index[ra[i]] > 1e-12) CHECK(idx[ra[i]] < idx[ra[i + 1]]);
    }
  }
}

TEST_CASE("bundled tracts match the brute-force oracle bit for bit") {
  const auto tracts = bundled_tracts();
  REQUIRE(tracts.size() == 100);
  const auto idx = compute_equity_index(tracts);

  const auto committed = io::CsvTable::load(test::data_dir() / "tracts" / "equity_oracle.csv");
  REQUIRE(committed.rows() == 100);
  for (std::size_t r = 0; r < 100; ++r) {
    CHECK(committed.at(r, 0) == idx.scores[r].tract_id);
    CHECK(parse_exact(committed.at(r, 1)) == idx.scores[r].internal);
    CHECK(parse_exact(committed.at(r, 2)) == idx.scores[r].external);
    CHECK(parse_exact(committed.at(r, 3)) == idx.scores[r].index);
  }

  // Straight-line re-evaluation in the test itself.
  auto column = [&](auto get) {
    std::vector<double> v;
    for (const auto& t : tracts) v.push_back(get(t));
    return v;
  };
  auto minmax = [](const std::vector<double>& v, bool invert) {
    const double lo = *std::min_element(v.begin(), v.end());
    const double hi = *std::max_element(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v) out.push_back(invert ? 1.0 - (x - lo) / (hi - lo) : (x - lo) / (hi - lo));
    return out;
  };
  const auto edu = minmax(column([](auto& t) { return t.educational_attainment; }), true);
  const auto pov = minmax(column([](auto& t) { return t.poverty_rate; }), false);
  const auto ren = minmax(column([](auto& t) { return t.renter_rate; }), false);
  const auto car = minmax(column([](auto& t) { return t.sub_two_car_rate; }), false);
  const auto chg = minmax(column([](auto& t) { return t.charger_access; }), true);
  const auto cst = minmax(column([](auto& t) { return t.ev_cost_index; }), false);
  const auto inc = minmax(column([](auto& t) { return t.incentive_usd; }), true);
  for (std::size_t i = 0; i < tracts.size(); ++i) {
    const double internal = std::clamp((((0.0 + 1.0 * edu[i]) + 1.0 * pov[i]) + 1.0 * ren[i] + 1.0 * car[i]) / 4.0, 0.0, 1.0);
    const double external = std::clamp(((0.0 + 1.0 * chg[i]) + 1.0 * cst[i] + 1.0 * inc[i]) / 3.0, 0.0, 1.0);
    const double index = std::clamp((0.5 * internal + 0.5 * external) / 1.0, 0.0, 1.0);
    CHECK(idx.scores[i].index == index);
  }
}

TEST_CASE("affordability_gap") {
  SUBCASE("amortization matches a month-by-month schedule") {
    const LoanTerms terms;
    const double annual = annual_loan_payment(48'000.0, terms);
    CHECK(annual == doctest::Approx(spreadsheet_annual_payment(48'000.0, 0.07, 60)).epsilon(1e-9));
    CHECK(annual == doctest::Approx(11'405.0).epsilon(1e-3));
    const std::vector<TractProfile> ts{tract("x", 50'000, .3, .1, .5, .4, 1, 50000, 0)};
    const auto r = affordability_gap(ts, 48'000.0, terms, 0.0);
    CHECK_FALSE(r.affords[0]);
    CHECK(r.fraction_affording == 0.0);
  }
  SUBCASE("zero-APR loans are straight-line") {
    LoanTerms terms;
    terms.apr = 0.0;
    CHECK(annual_loan_payment(60'000.0, terms) == doctest::Approx(12'000.0));
  }
  SUBCASE("fully covered price is affordable everywhere") {
    const auto r = affordability_gap(bundled_tracts(), 4'000.0, LoanTerms{}, 4'000.0);
    CHECK(r.fraction_affording == 1.0);
  }
  SUBCASE("bundled calibration") {
    const auto tracts = bundled_tracts();
    CHECK(affordability_gap(tracts, 48'000.0, LoanTerms{}, 0.0).fraction_affording == doctest::Approx(0.19).epsilon(1e-12));
    CHECK(affordability_gap(tracts, 28'000.0, LoanTerms{}, 4'000.0).fraction_affording == doctest::Approx(0.44).epsilon(1e-12));
  }
  SUBCASE("pass set is monotone in price and incentive") {
    const auto tracts = bundled_tracts();
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> price(15'000, 70'000), inc(0, 8'000), step(0, 5'000);
    for (int trial = 0; trial < 100; ++trial) {
      const double p = price(rng);
      const double i = std::min(inc(rng), p);
      const auto base = affordability_gap(tracts, p, LoanTerms{}, i);
      const auto more_incentive = affordability_gap(tracts, p, LoanTerms{}, std::min(p, i + step(rng)));
      const auto cheaper = affordability_gap(tracts, std::max(i, p - step(rng)), LoanTerms{}, i);
      for (std::size_t t = 0; t < tracts.size(); ++t) {
        if (base.affords[t]) {
          CHECK(more_incentive.affords[t]);
          CHECK(cheaper.affords[t]);
        }
      }
    }
  }
  SUBCASE("invalid terms") {
    LoanTerms bad;
    bad.term_months = 0;
    try {
      affordability_gap(bundled_tracts(), 40'000, bad, 0);
      FAIL("expected InvalidTerms");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InvalidTerms);
    }
    CHECK_THROWS_AS(affordability_gap(bundled_tracts(), 1'000, LoanTerms{}, 4'000), Error);
  }
}

TEST_CASE("charger_ratio") {
  CHECK(charger_ratio(22'000, 1'000).per_charger == 22.0);
  CHECK(charger_ratio(25'800, 1'000).per_charger == 25.8);
  CHECK(charger_ratio(25'800, 1'000).label == "1:25.8");
  CHECK(charger_ratio(500, 500).per_charger == 1.0);
  try {
    charger_ratio(10, 0);
    FAIL("expected ZeroChargers");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ZeroChargers);
  }
}

TEST_CASE("project_adoption") {
  SUBCASE("round trip through a known logistic") {
    const LogisticParams truth{1.0, 0.3, 2030.0};
    std::vector<std::pair<double, double>> anchors;
    for (double t : {2018.0, 2024.0, 2029.5, 2036.0}) anchors.emplace_back(t, truth(t));
    const auto p = project_adoption(anchors, 2050);
    CHECK_FALSE(p.degenerate);
    CHECK(std::abs(p.fit.growth_rate - 0.3) < 1e-6);
    CHECK(std::abs(p.fit.midpoint - 2030.0) < 1e-6);
    CHECK(p.rmse < 1e-9);
  }
  SUBCASE("equal anchors fall back to a flat line") {
    const std::vector<std::pair<double, double>> anchors{{2024.0, 0.2}, {2025.0, 0.2}};
    const auto p = project_adoption(anchors, 2035);
    CHECK(p.degenerate);
    for (const auto& [y, v] : p.trajectory.anchors()) CHECK(v == doctest::Approx(0.2));
  }
  SUBCASE("regional anchors project upward") {
    const std::vector<std::pair<double, double>> anchors{{2024.25, 0.1453}, {2024.875, 0.16}};
    const auto p = project_adoption(anchors, 2040);
    CHECK_FALSE(p.degenerate);
    CHECK(p.fit.growth_rate > 0.0);
    const auto& pts = p.trajectory.anchors();
    for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].second > pts[i - 1].second);
    CHECK(p.trajectory(2035) > 0.16);
    CHECK(p.trajectory(2035) <= 1.0);
  }
  SUBCASE("outputs are bounded for random anchors") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> s(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      const std::vector<std::pair<double, double>> anchors{{2020, s(rng)}, {2023, s(rng)}, {2026, s(rng)}};
      const auto p = project_adoption(anchors, 2060);
      for (const auto& [y, v] : p.trajectory.anchors()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
  SUBCASE("needs two anchors") {
    const std::vector<std::pair<double, double>> one{{2024.0, 0.1}};
    try {
      project_adoption(one, 2030);
      FAIL("expected InsufficientAnchors");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InsufficientAnchors);
    }
  }
}
