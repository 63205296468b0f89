// Copyright 2026 The hcmon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "hcmon/metrics.hpp"
#include "oracles.hpp"

namespace m = hcmon::metrics;

namespace {

std::vector<m::GroupedOutcome> outcomes(std::initializer_list<std::pair<const char*, int>> groups,
                                        std::initializer_list<int> positives) {
  std::vector<m::GroupedOutcome> out;
  auto pos = positives.begin();
  for (const auto& [g, n] : groups) {
    for (int i = 0; i < n; ++i) out.push_back({g, i < *pos});
    ++pos;
  }
  return out;
}

std::vector<oracle::Outcome> to_oracle(const std::vector<m::GroupedOutcome>& w) {
  std::vector<oracle::Outcome> out;
  for (const auto& o : w) out.push_back({o.group, o.positive});
  return out;
}

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t below(std::mt19937_64& rng, std::size_t n) { return rng() % n; }

}  // namespace

TEST(DemographicParity, EqualRatesGiveZero) {
  EXPECT_DOUBLE_EQ(m::demographic_parity_difference(outcomes({{"a", 10}, {"b", 20}}, {5, 10}), 1)
                       .value,
                   0.0);
}

TEST(DemographicParity, TwoGroupGap) {
  const auto v = m::demographic_parity_difference(outcomes({{"a", 10}, {"b", 10}}, {8, 5}), 1);
  EXPECT_NEAR(v.value, 0.3, 1e-15);
  EXPECT_EQ(v.n, 20u);
  EXPECT_EQ(v.group_stats.at("a"), (m::GroupStat{10, 0.8}));
}

TEST(DemographicParity, MaxPairwiseGapOverThreeGroups) {
  const auto w = outcomes({{"a", 10}, {"b", 10}, {"c", 10}}, {2, 5, 9});
  EXPECT_NEAR(m::demographic_parity_difference(w, 1).value, 0.7, 1e-15);
}

TEST(DemographicParity, SmallGroupsAreIgnored) {
  const auto w = outcomes({{"a", 10}, {"b", 10}, {"tiny", 2}}, {8, 8, 0});
  EXPECT_DOUBLE_EQ(m::demographic_parity_difference(w, 5).value, 0.0);
}

TEST(DemographicParity, NeedsTwoEligibleGroups) {
  EXPECT_THROW(m::demographic_parity_difference(outcomes({{"a", 10}, {"b", 3}}, {5, 1}), 5),
               m::MetricError);
  EXPECT_THROW(m::demographic_parity_difference({}, 1), m::MetricError);
}

TEST(DisparateImpact, EqualRatesGiveOne) {
  EXPECT_DOUBLE_EQ(
      m::disparate_impact_ratio(outcomes({{"a", 10}, {"b", 10}}, {5, 5}), 1).value, 1.0);
}

TEST(DisparateImpact, RatioOfRates) {
  EXPECT_DOUBLE_EQ(
      m::disparate_impact_ratio(outcomes({{"a", 10}, {"b", 10}}, {4, 8}), 1).value, 0.5);
}

TEST(DisparateImpact, ThreeGroupsMatchOracle) {
  const auto w = outcomes({{"a", 10}, {"b", 10}, {"c", 10}}, {2, 5, 8});
  EXPECT_NEAR(m::disparate_impact_ratio(w, 1).value, 0.25, 1e-15);
  EXPECT_NEAR(*oracle::dir(to_oracle(w), 1), 0.25, 1e-15);
}

TEST(DisparateImpact, AllZeroRatesAreUndefined) {
  EXPECT_THROW(m::disparate_impact_ratio(outcomes({{"a", 10}, {"b", 10}}, {0, 0}), 1),
               m::MetricError);
}

TEST(KsStatistic, Examples) {
  const std::vector<double> ref{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(m::ks_statistic(ref, ref), 0.0);
  EXPECT_DOUBLE_EQ(m::ks_statistic(std::vector<double>{0, 0.5, 1}, std::vector<double>{10, 11}),
                   1.0);
  EXPECT_DOUBLE_EQ(m::ks_statistic(ref, std::vector<double>{2, 3, 4, 5}), 0.25);
  EXPECT_THROW(m::ks_statistic(ref, std::vector<double>{}), m::MetricError);
}

TEST(KsStatistic, MonotoneInLocationShift) {
  std::mt19937_64 rng(3);
  std::vector<double> ref(150);
  for (auto& x : ref) x = uniform(rng);
  double last = 0.0;
  for (int step = 0; step <= 20; ++step) {
    std::vector<double> win = ref;
    for (auto& x : win) x += 0.05 * step;
    const double ks = m::ks_statistic(ref, win);
    EXPECT_GE(ks, last) << "shift step " << step;
    last = ks;
  }
  EXPECT_DOUBLE_EQ(last, 1.0);
}

TEST(Psi, IdenticalSamplesAreNearZero) {
  std::vector<double> ref;
  for (int i = 0; i < 50; ++i) ref.push_back(i * 0.37);
  EXPECT_LE(m::psi(ref, ref, 10), 1e-6);
}

TEST(Psi, WindowInOneBinAgainstUniformReference) {
  std::vector<double> ref;
  for (int i = 0; i < 10; ++i) ref.push_back(i + 0.5);
  const std::vector<double> win(10, 0.6);
  EXPECT_NEAR(m::psi(ref, win, 10), 8.289396330278864, 1e-9);
}

TEST(Psi, SymmetricUnderWhichBinGained) {
  std::vector<std::size_t> ref{10, 10, 10, 10, 10, 10, 10, 10, 10, 10};
  std::vector<std::size_t> a = ref;
  std::vector<std::size_t> b = ref;
  a[2] += 5;
  a[7] -= 5;
  b[2] -= 5;
  b[7] += 5;
  EXPECT_NEAR(m::psi_from_counts(ref, 100, a, 100), m::psi_from_counts(ref, 100, b, 100),
              1e-15);
}

TEST(Psi, DegenerateBaselineAndBadBins) {
  const std::vector<double> flat(5, 1.0);
  EXPECT_THROW(m::psi(flat, flat, 10), m::MetricError);
  EXPECT_THROW(m::psi(std::vector<double>{1, 2}, flat, 1), m::MetricError);
}

TEST(Psi, OutOfRangeValuesClipToEdgeBins) {
  const std::vector<double> ref{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const m::PsiBinning binning(ref, 5);
  EXPECT_EQ(binning.bin_of(-100), 0);
  EXPECT_EQ(binning.bin_of(100), 4);
  EXPECT_EQ(binning.bin_of(10), 4);
}

TEST(PredictionDrift, Examples) {
  const std::vector<std::string> ab{"a", "b"};
  EXPECT_NEAR(m::prediction_drift_jsd(ab, ab), 0.0, 1e-15);
  EXPECT_NEAR(m::prediction_drift_jsd(std::vector<std::string>{"a", "a"},
                                      std::vector<std::string>{"b"}),
              1.0, 1e-12);
  std::vector<std::string> q(9, "a");
  q.push_back("b");
  EXPECT_NEAR(m::prediction_drift_jsd(ab, q), 0.1467931024360521, 1e-9);
  EXPECT_THROW(m::prediction_drift_jsd(ab, {}), m::MetricError);
}

TEST(Accuracy, Examples) {
  std::vector<m::PredictionLabel> pairs;
  for (int i = 0; i < 10; ++i) pairs.push_back({"x", i < 7 ? "x" : "y"});
  EXPECT_DOUBLE_EQ(m::accuracy_on_feedback(pairs), 0.7);
  EXPECT_DOUBLE_EQ(m::accuracy_on_feedback(std::vector<m::PredictionLabel>{{"a", "a"}}), 1.0);
  EXPECT_DOUBLE_EQ(m::accuracy_on_feedback(std::vector<m::PredictionLabel>{{"a", "b"}}), 0.0);
  EXPECT_THROW(m::accuracy_on_feedback({}), m::MetricError);
}

TEST(MeanConfidence, Examples) {
  EXPECT_DOUBLE_EQ(m::mean_confidence(std::vector<double>{1, 1, 1}), 1.0);
  EXPECT_NEAR(m::mean_confidence(std::vector<double>{0.2, 0.4}), 0.3, 1e-15);
  std::mt19937_64 rng(7);
  std::vector<double> draws(1000);
  for (auto& d : draws) d = uniform(rng);
  EXPECT_NEAR(m::mean_confidence(draws), oracle::mean(draws), 1e-12);
  EXPECT_THROW(m::mean_confidence({}), m::MetricError);
}

TEST(RangeAndFlagRates, Examples) {
  std::vector<std::optional<double>> values(20, 5.0);
  EXPECT_DOUBLE_EQ(m::range_violation_rate(values, 0, 10), 0.0);
  for (int i = 0; i < 3; ++i) values[static_cast<std::size_t>(i)] = 11.0;
  EXPECT_DOUBLE_EQ(m::range_violation_rate(values, 0, 10), 0.15);
  EXPECT_DOUBLE_EQ(m::range_violation_rate(values, 20, 30), 1.0);
  values.push_back(std::nullopt);
  EXPECT_DOUBLE_EQ(m::range_violation_rate(values, 0, 10), 0.15);

  std::vector<std::optional<bool>> flags(100, false);
  EXPECT_DOUBLE_EQ(m::flag_rate(flags), 0.0);
  flags[0] = flags[1] = true;
  EXPECT_DOUBLE_EQ(m::flag_rate(flags), 0.02);
  EXPECT_THROW(m::flag_rate(std::vector<std::optional<bool>>{std::nullopt}), m::MetricError);
}

TEST(Catalog, NamesAndFamilies) {
  EXPECT_EQ(m::catalog().size(), 9u);
  EXPECT_EQ(m::find_metric("ks_drift")->family, m::MetricFamily::kInputDrift);
  EXPECT_EQ(m::find_metric("flag_rate")->family, m::MetricFamily::kPrivacy);
  EXPECT_EQ(m::find_metric("range_rate")->args.size(), 3u);
  EXPECT_EQ(m::find_metric("nope"), nullptr);
  for (const auto& e : m::catalog()) {
    EXPECT_EQ(m::parse_family(m::to_string(e.family)), e.family);
  }
}

// Randomized equivalence with the brute-force oracles, plus bounds and
// permutation invariance on the same samples.
class OracleSweep : public ::testing::TestWithParam<int> {};

TEST_P(OracleSweep, MetricsMatchOracles) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(GetParam()));
  for (int trial = 0; trial < 250; ++trial) {
    const std::size_t n = 2 + below(rng, 199);
    const std::size_t groups = 2 + below(rng, 3);
    std::vector<m::GroupedOutcome> w;
    for (std::size_t i = 0; i < n; ++i) {
      w.push_back({std::string(1, static_cast<char>('a' + below(rng, groups))),
                   uniform(rng) < 0.3 + 0.1 * static_cast<double>(i % 3)});
    }
    const std::size_t min_group = 1 + below(rng, 5);
    const auto ow = to_oracle(w);
    if (const auto expect = oracle::dpd(ow, min_group)) {
      const double got = m::demographic_parity_difference(w, min_group).value;
      EXPECT_NEAR(got, *expect, 1e-12);
      EXPECT_GE(got, 0.0);
      EXPECT_LE(got, 1.0);
    } else {
      EXPECT_THROW(m::demographic_parity_difference(w, min_group), m::MetricError);
    }
    if (const auto expect = oracle::dir(ow, min_group)) {
      EXPECT_NEAR(m::disparate_impact_ratio(w, min_group).value, *expect, 1e-12);
    } else {
      EXPECT_THROW(m::disparate_impact_ratio(w, min_group), m::MetricError);
    }

    std::vector<double> ref(1 + below(rng, 200));
    std::vector<double> win(1 + below(rng, 200));
    const double shift = uniform(rng);
    // Coarse values force ties, which is where ECDF shortcuts go wrong.
    for (auto& x : ref) x = std::round(uniform(rng) * 40) / 4;
    for (auto& x : win) x = std::round((uniform(rng) + shift) * 40) / 4;
    const double ks = m::ks_statistic(ref, win);
    EXPECT_NEAR(ks, oracle::ks(ref, win), 1e-12);
    EXPECT_GE(ks, 0.0);
    EXPECT_LE(ks, 1.0);

    for (auto& x : ref) x += uniform(rng) * 1e-3;
    const int bins = 2 + static_cast<int>(below(rng, 19));
    const double psi = m::psi(ref.size() > 1 ? ref : std::vector<double>{0, 1}, win, bins);
    EXPECT_NEAR(psi, oracle::psi(ref.size() > 1 ? ref : std::vector<double>{0, 1}, win, bins),
                1e-9);
    EXPECT_GE(psi, 0.0);

    std::vector<std::string> pr(1 + below(rng, 200));
    std::vector<std::string> pw(1 + below(rng, 200));
    for (auto& s : pr) s = std::string(1, static_cast<char>('p' + below(rng, 4)));
    for (auto& s : pw) s = std::string(1, static_cast<char>('q' + below(rng, 4)));
    const double jsd = m::prediction_drift_jsd(pr, pw);
    EXPECT_NEAR(jsd, oracle::jsd(pr, pw), 1e-9);
    EXPECT_GE(jsd, 0.0);
    EXPECT_LE(jsd, 1.0);

    std::vector<m::PredictionLabel> pairs;
    std::vector<std::pair<std::string, std::string>> opairs;
    for (std::size_t i = 0, k = 1 + below(rng, 200); i < k; ++i) {
      const std::string p(1, static_cast<char>('a' + below(rng, 3)));
      const std::string l(1, static_cast<char>('a' + below(rng, 3)));
      pairs.push_back({p, l});
      opairs.emplace_back(p, l);
    }
    EXPECT_NEAR(m::accuracy_on_feedback(pairs), oracle::accuracy(opairs), 1e-12);

    std::vector<std::optional<double>> values(1 + below(rng, 200));
    std::vector<std::optional<bool>> flags(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (uniform(rng) < 0.9) values[i] = uniform(rng) * 20 - 5;
      if (uniform(rng) < 0.9) flags[i] = uniform(rng) < 0.2;
    }
    if (const auto expect = oracle::range_rate(values, 0, 10)) {
      EXPECT_NEAR(m::range_violation_rate(values, 0, 10), *expect, 1e-12);
    }
    if (const auto expect = oracle::flag_rate(flags)) {
      EXPECT_NEAR(m::flag_rate(flags), *expect, 1e-12);
    }

    // Permutation invariance.
    auto shuffled = w;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    if (oracle::dpd(ow, min_group)) {
      EXPECT_DOUBLE_EQ(m::demographic_parity_difference(shuffled, min_group).value,
                       m::demographic_parity_difference(w, min_group).value);
    }
    auto win2 = win;
    std::shuffle(win2.begin(), win2.end(), rng);
    EXPECT_DOUBLE_EQ(m::ks_statistic(ref, win2), m::ks_statistic(ref, win));
    auto pw2 = pw;
    std::shuffle(pw2.begin(), pw2.end(), rng);
    EXPECT_DOUBLE_EQ(m::prediction_drift_jsd(pr, pw2), jsd);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, OracleSweep, ::testing::Values(1, 2, 3, 4));
