#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "femdual/experiments.hpp"

using namespace femdual;

TEST_CASE("report formatting") {
  SUBCASE("empty report is header only") {
    ExperimentReport report;
    std::ostringstream out;
    write_report(out, report);
    CHECK(out.str() ==
          "level,N,h,error,rate,energy_primal,energy_dual,gap,iters\n");
  }
  SUBCASE("three data rows carry two rate cells") {
    ExperimentReport report;
    for (int level : {3, 4, 5}) {
      LevelRow row;
      row.level = level;
      row.n_vertices = (1 << level) + 1;
      row.h = level_h(level);
      row.error = std::pow(4.0, -level);
      report.rows.push_back(row);
    }
    compute_rates(report);
    std::ostringstream out;
    write_report(out, report);
    std::string line;
    std::istringstream in(out.str());
    std::getline(in, line);  // header
    std::getline(in, line);
    CHECK(line.find(",,") != std::string::npos);  // first rate empty
    std::getline(in, line);
    CHECK(line.find(",2,") != std::string::npos);  // exact rate 2
    CHECK(report.rows[1].rate == doctest::Approx(2.0));
    CHECK(report.rows[2].rate == doctest::Approx(2.0));
  }
  SUBCASE("rates rescale over skipped levels") {
    ExperimentReport report;
    LevelRow a;
    a.level = 2;
    a.error = 1.0;
    LevelRow b;
    b.level = 4;
    b.error = 1.0 / 16.0;
    report.rows = {a, b};
    compute_rates(report);
    CHECK(report.rows[1].rate == doctest::Approx(2.0));
  }
}

TEST_CASE("emitted files are byte identical across runs") {
  const ExperimentReport a = run_poisson({2, 3}, PoissonVariant::cr_primal);
  const ExperimentReport b = run_poisson({2, 3}, PoissonVariant::cr_primal);
  const std::string path_a = "report_a.csv";
  const std::string path_b = "report_b.csv";
  emit_report(a, path_a);
  emit_report(b, path_b);
  std::ifstream fa(path_a), fb(path_b);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().find("nan") == std::string::npos);
  std::filesystem::remove(path_a);
  std::filesystem::remove(path_b);
}

TEST_CASE("problem registry") {
  SUBCASE("tv plateau height") {
    const ProblemSpec tv = tv_spec(10.0, 0.5);
    CHECK(tv.exact_solution(Eigen::Vector2d{0.1, 0.1}) ==
          doctest::Approx(0.6));
    CHECK(tv.exact_solution(Eigen::Vector2d{0.7, 0.0}) == 0.0);
    // I(u) = 0.6 * 2 pi r + (alpha/2)(1-0.6)^2 pi r^2 = 0.8 pi
    CHECK(tv.exact_energy == doctest::Approx(0.8 * M_PI));
  }
  SUBCASE("infinity Laplacian pyramid integral") {
    const ProblemSpec inf = inf_laplace_spec();
    CHECK(inf.exact_energy == doctest::Approx(-4.0 / 3.0));
    CHECK(inf.exact_solution(Eigen::Vector2d{0.0, 0.0}) == 1.0);
    CHECK(inf.exact_solution(Eigen::Vector2d{0.5, -0.25}) ==
          doctest::Approx(0.5));
  }
  SUBCASE("poisson data is consistent") {
    const ProblemSpec p = poisson_spec();
    const Eigen::Vector2d x{0.3, -0.4};
    CHECK(p.exact_solution(Eigen::Vector2d{1.0, 0.5}) == doctest::Approx(0.0));
    // -laplace u = f for the product solution
    const double h = 1e-5;
    double lap = 0.0;
    for (int d = 0; d < 2; ++d) {
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      e[d] = h;
      lap += (p.exact_solution(x + e) - 2.0 * p.exact_solution(x) +
              p.exact_solution(x - e)) /
             (h * h);
    }
    CHECK(-lap == doctest::Approx(p.source(x)).epsilon(1e-5));
  }
  SUBCASE("p laplace source balances the flux divergence") {
    for (const double p : {1.5, 3.0}) {
      const ProblemSpec spec = p_laplace_spec(p);
      const Eigen::Vector2d x{0.35, -0.55};
      const double h = 1e-6;
      double div = 0.0;
      for (int d = 0; d < 2; ++d) {
        Eigen::Vector2d e = Eigen::Vector2d::Zero();
        e[d] = h;
        div += (spec.exact_flux(x + e)[d] - spec.exact_flux(x - e)[d]) /
               (2.0 * h);
      }
      CHECK(spec.source(x) == doctest::Approx(-div).epsilon(1e-6));
    }
  }
}

TEST_CASE("level guards and warnings") {
  CHECK_THROWS_AS(run_poisson({1}, PoissonVariant::cr_primal),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_poisson({9}, PoissonVariant::cr_primal),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_tv({2}, 10.0, 0.5, TvMethod::cr),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_poisson({4, 3}, PoissonVariant::cr_primal),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_p_laplace({3}, 0.9), std::invalid_argument);
}

TEST_CASE("non-convergence is flagged, not thrown") {
  RunOptions opt;
  opt.max_iters = 2;
  const ExperimentReport report = run_tv({3}, 10.0, 0.5, TvMethod::cr, opt);
  CHECK_FALSE(report.all_converged);
  CHECK(report.rows.size() == 1);  // the report is still produced
}

TEST_CASE("internal consistency of reported rates") {
  const ExperimentReport report =
      run_poisson({3, 4, 5}, PoissonVariant::modified_mixed);
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const double expected =
        std::log2(report.rows[i - 1].error / report.rows[i].error);
    CHECK(report.rows[i].rate == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("weak duality across reported rows") {
  const ExperimentReport report =
      run_poisson({3, 4}, PoissonVariant::classical_mixed);
  for (const LevelRow& row : report.rows) {
    if (std::isfinite(row.energy_primal) && std::isfinite(row.energy_dual))
      CHECK(row.energy_primal >= row.energy_dual - 1e-9);
  }
}

TEST_CASE("field dump format") {
  const ExperimentReport report =
      run_poisson({2}, PoissonVariant::cr_primal);
  REQUIRE(report.fields.size() == 1);
  std::ostringstream out;
  write_p0_csv(out, report.fields[0]);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "x_T,y_T,value");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == report.fields[0].mesh->num_elements());
}
