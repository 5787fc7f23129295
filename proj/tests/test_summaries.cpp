#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ctdesign/summaries.hpp"

using namespace ctdesign;

namespace {

Trajectory make_traj(std::initializer_list<std::initializer_list<int>> rows) {
  Trajectory t;
  const int n_rows = static_cast<int>(rows.size());
  const int n_cols = static_cast<int>(rows.begin()->size());
  t.obs.resize(n_rows, n_cols);
  t.times.resize(n_rows);
  int r = 0;
  for (const auto& row : rows) {
    t.times[r] = r + 1.0;
    int c = 0;
    for (int v : row) t.obs(r, c++) = v;
    ++r;
  }
  return t;
}

}  // namespace

TEST_CASE("summary values match hand calculations") {
  const Trajectory t = make_traj({{0}, {10}, {20}});
  SummaryScheme scheme{{Stat::Mean, Stat::Median, Stat::Variance}};
  const Eigen::VectorXd s = summarize(t, scheme);
  REQUIRE(s.size() == 3);
  CHECK(s[0] == doctest::Approx(10.0));
  CHECK(s[1] == doctest::Approx(10.0));
  CHECK(s[2] == doctest::Approx(100.0));

  SummaryScheme lv{{Stat::Mean, Stat::LogVariance, Stat::Max}};
  const Eigen::VectorXd s2 = summarize(t, lv);
  CHECK(s2[1] == doctest::Approx(std::log(100.5)));
  CHECK(s2[2] == doctest::Approx(20.0));
}

TEST_CASE("constant series keep finite log variance") {
  const Trajectory t = make_traj({{5}, {5}, {5}, {5}});
  SummaryScheme scheme{{Stat::Variance, Stat::LogVariance, Stat::Median}};
  const Eigen::VectorXd s = summarize(t, scheme);
  CHECK(s[0] == doctest::Approx(0.0));
  CHECK(s[1] == doctest::Approx(std::log(0.5)));
  CHECK(s[2] == doctest::Approx(5.0));
}

TEST_CASE("even length medians take the midpoint") {
  const Trajectory t = make_traj({{1}, {2}, {3}, {10}});
  const Eigen::VectorXd s = summarize(t, {{Stat::Median}});
  CHECK(s[0] == doctest::Approx(2.5));
}

TEST_CASE("singleton series have zero variance") {
  const Trajectory t = make_traj({{7}});
  const Eigen::VectorXd s =
      summarize(t, {{Stat::Mean, Stat::Variance, Stat::LogVariance}});
  CHECK(s[0] == doctest::Approx(7.0));
  CHECK(s[1] == doctest::Approx(0.0));
  CHECK(s[2] == doctest::Approx(std::log(0.5)));
}

TEST_CASE("multi species summaries are laid out species major") {
  const Trajectory t = make_traj({{1, 10}, {2, 20}});
  const Eigen::VectorXd s = summarize(t, {{Stat::Mean, Stat::Max}});
  REQUIRE(s.size() == 4);
  CHECK(s[0] == doctest::Approx(1.5));   // species 0 mean
  CHECK(s[1] == doctest::Approx(2.0));   // species 0 max
  CHECK(s[2] == doctest::Approx(15.0));  // species 1 mean
  CHECK(s[3] == doctest::Approx(20.0));  // species 1 max
}

TEST_CASE("default schemes per model family") {
  CHECK(default_scheme("death").stats ==
        std::vector<Stat>{Stat::Mean, Stat::Variance});
  CHECK(default_scheme("si").stats ==
        std::vector<Stat>{Stat::Mean, Stat::Variance});
  CHECK(default_scheme("sir").stats ==
        std::vector<Stat>{Stat::Mean, Stat::Median, Stat::Variance});
  CHECK(default_scheme("seir").stats ==
        std::vector<Stat>{Stat::Mean, Stat::Median, Stat::Variance});
  CHECK(default_scheme("lv").stats ==
        std::vector<Stat>{Stat::Mean, Stat::LogVariance, Stat::Max});
  CHECK_THROWS_AS(default_scheme("nope"), std::invalid_argument);
}

TEST_CASE("stat names round trip") {
  for (Stat s : {Stat::Mean, Stat::Median, Stat::Variance, Stat::LogVariance,
                 Stat::Max})
    CHECK(stat_from_name(stat_name(s)) == s);
  CHECK_THROWS_AS(stat_from_name("mode"), std::invalid_argument);
}

TEST_CASE("summary dimension accounting") {
  SummaryScheme scheme{{Stat::Mean, Stat::Variance}};
  CHECK(scheme.dim(1) == 2);
  CHECK(scheme.dim(2) == 4);
}

TEST_CASE("informative design correlates summaries with the rate parameter") {
  const ModelSpec m = death_model();
  const ParamPrior prior = default_prior("death");
  Eigen::VectorXd times(8);
  for (int k = 0; k < 8; ++k) times[k] = 0.5 + k;
  const auto report =
      informativeness(m, prior, times, default_scheme("death"), 400, 0.5, {}, 7);
  REQUIRE(report.spearman_abs.rows() == 1);
  REQUIRE(report.spearman_abs.cols() == 2);
  // faster infection -> higher mean count; the mean summary tracks beta1
  CHECK(report.spearman_abs(0, 0) > 0.5);
  CHECK(report.best_per_param[0] > 0.5);
  CHECK(report.pass());
}

TEST_CASE("saturated designs are flagged as uninformative") {
  // By t = 60 every run is fully infected, so the summaries are constant.
  const ModelSpec m = death_model();
  const ParamPrior prior = default_prior("death");
  Eigen::VectorXd times(3);
  times << 60.0, 61.0, 62.0;
  const auto report =
      informativeness(m, prior, times, default_scheme("death"), 200, 0.5, {}, 7);
  CHECK_FALSE(report.pass());
  CHECK(report.weak_params == std::vector<int>{0});
  CHECK(report.best_per_param[0] < 0.5);
}
