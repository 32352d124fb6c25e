#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pnnqp/json_io.hpp"
#include "pnnqp/qp_problem.hpp"
#include "support/generators.hpp"

using namespace pnnqp;
namespace fs = std::filesystem;

static std::string fixture(const std::string& name) {
  return std::string(PNNQP_FIXTURE_DIR) + "/" + name;
}

TEST_CASE("example1 fixture loads with expected shape") {
  const QpProblem p = load_problem(fixture("example1.json"));
  CHECK(p.n() == 3);
  CHECK(p.m() == 1);
  CHECK(p.h() == 2);
  CHECK(p.Q(0, 0) == Catch::Approx(0.72));
  CHECK(p.Q(1, 1) == Catch::Approx(0.6));
  CHECK(p.Q(2, 2) == Catch::Approx(0.4));
  CHECK(p.Q(0, 1) == 0.0);
  CHECK(p.B(1, 2) == Catch::Approx(0.6));
}

TEST_CASE("example2 fixture loads with expected shape") {
  const QpProblem p = load_problem(fixture("example2.json"));
  CHECK(p.n() == 4);
  CHECK(p.m() == 1);
  CHECK(p.h() == 2);
  CHECK(p.Q(0, 1) == Catch::Approx(0.35));
  CHECK(p.Q(1, 3) == Catch::Approx(1.0 / 9.0));
}

TEST_CASE("zero equality row is rejected as rank-deficient") {
  json j = detail::parse_file(fixture("example1.json"));
  j["A"] = json::array({json::array({0.0, 0.0, 0.0})});
  CHECK_THROWS_MATCHES(problem_from_json(j), ValidationError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("rank-deficient A")));
}

TEST_CASE("load_problem error taxonomy") {
  json j = detail::parse_file(fixture("example1.json"));

  SECTION("missing key") {
    j.erase("Q");
    CHECK_THROWS_AS(problem_from_json(j), ParseError);
  }
  SECTION("non-numeric entry") {
    j["c"][0] = "oops";
    CHECK_THROWS_AS(problem_from_json(j), ParseError);
  }
  SECTION("ragged matrix rows") {
    j["Q"][1] = json::array({0.0, 0.6});
    CHECK_THROWS_AS(problem_from_json(j), ValidationError);
  }
  SECTION("dimension mismatch between fields") {
    j["c"] = json::array({1.0, 2.0});
    CHECK_THROWS_MATCHES(problem_from_json(j), ValidationError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("dimension mismatch")));
  }
  SECTION("indefinite Q") {
    j["Q"] = json::array({json::array({1.0, 0.0, 0.0}), json::array({0.0, -1.0, 0.0}),
                          json::array({0.0, 0.0, 1.0})});
    CHECK_THROWS_MATCHES(problem_from_json(j), ValidationError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("indefinite Q")));
  }
  SECTION("bad JSON text") {
    CHECK_THROWS_AS(detail::parse_file("/nonexistent/file.json"), ParseError);
  }
}

TEST_CASE("cross terms may be split arbitrarily: Q is symmetrized on load") {
  json j = detail::parse_file(fixture("example1.json"));
  j["Q"][0][1] = 0.2;  // put the whole cross coefficient on one side
  j["Q"][1][0] = 0.0;
  const QpProblem p = problem_from_json(j);
  CHECK(p.Q(0, 1) == Catch::Approx(0.1));
  CHECK(p.Q(1, 0) == Catch::Approx(0.1));
}

TEST_CASE("validate reports measured quantities") {
  SECTION("example1 passes, min eigenvalue 0.4") {
    const ValidationReport rep = validate(load_problem(fixture("example1.json")));
    CHECK(rep.all_pass());
    CHECK(rep.value_of("q_positive_semidefinite") == Catch::Approx(0.4).margin(1e-9));
  }
  SECTION("example2 passes, min eigenvalue about 0.3012") {
    const ValidationReport rep = validate(load_problem(fixture("example2.json")));
    CHECK(rep.all_pass());
    CHECK(rep.value_of("q_positive_semidefinite") == Catch::Approx(0.3012).margin(1e-3));
  }
  SECTION("indefinite Q fails the PSD check with the eigenvalue recorded") {
    QpProblem p;
    p.Q = Eigen::Matrix2d::Identity();
    p.Q(1, 1) = -1.0;
    p.c = Eigen::Vector2d::Zero();
    p.A = Eigen::MatrixXd::Ones(1, 2);
    p.b = Eigen::VectorXd::Ones(1);
    p.B = Eigen::MatrixXd::Identity(2, 2);
    p.d = Eigen::VectorXd::Ones(2);
    const ValidationReport rep = validate(p);
    CHECK_FALSE(rep.all_pass());
    CHECK(rep.value_of("q_positive_semidefinite") == Catch::Approx(-1.0));
    CHECK(rep.value_of("q_symmetry_defect") == 0.0);
  }
  SECTION("validation report serializes one entry per check") {
    const ValidationReport rep = validate(load_problem(fixture("example1.json")));
    const json j = validation_report_to_json(rep);
    CHECK(j["all_pass"] == true);
    CHECK(j["checks"].size() == rep.checks.size());
    for (const auto& c : j["checks"]) {
      CHECK(c.contains("name"));
      CHECK(c.contains("pass"));
      CHECK(c.contains("value"));
    }
  }
}

TEST_CASE("eigenvalues_symmetric") {
  SECTION("diagonal matrix") {
    Eigen::MatrixXd q = Eigen::Vector3d(0.72, 0.6, 0.4).asDiagonal();
    const Eigen::VectorXd evs = eigenvalues_symmetric(q);
    REQUIRE(evs.size() == 3);
    CHECK(evs[0] == Catch::Approx(0.4).epsilon(1e-12));
    CHECK(evs[1] == Catch::Approx(0.6).epsilon(1e-12));
    CHECK(evs[2] == Catch::Approx(0.72).epsilon(1e-12));
  }
  SECTION("identity") {
    const Eigen::VectorXd evs = eigenvalues_symmetric(Eigen::Matrix3d::Identity());
    CHECK(evs.isApproxToConstant(1.0, 1e-14));
  }
  SECTION("example2 Q, checked against the characteristic-polynomial roots") {
    const QpProblem p = load_problem(fixture("example2.json"));
    const Eigen::VectorXd evs = eigenvalues_symmetric(p.Q);
    REQUIRE(evs.size() == 4);
    CHECK(evs[0] == Catch::Approx(0.3012).margin(1e-3));
    CHECK(evs[1] == Catch::Approx(0.9396).margin(1e-3));
    CHECK(evs[2] == Catch::Approx(1.8547).margin(1e-3));
    CHECK(evs[3] == Catch::Approx(4.0045).margin(1e-3));
  }
  SECTION("non-symmetric input throws") {
    Eigen::MatrixXd s(2, 2);
    s << 1.0, 2.0, 0.0, 1.0;
    CHECK_THROWS_AS(eigenvalues_symmetric(s), ValidationError);
  }
}

TEST_CASE("eigenvalue properties on random PSD matrices") {
  testing::Rng rng(20240301);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = rng.uniform_int(1, 6);
    const Eigen::MatrixXd r = rng.matrix(k, k);
    const Eigen::MatrixXd s = r.transpose() * r;
    const Eigen::VectorXd evs = eigenvalues_symmetric(s);
    REQUIRE(evs.size() == k);
    CHECK(evs.minCoeff() >= -1e-9);
    CHECK(evs.sum() == Catch::Approx(s.trace()).margin(1e-8));
    // independent cross-check against Eigen's solver
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(s);
    CHECK((evs - ref.eigenvalues()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("matrix_rank by pivoted elimination") {
  CHECK(matrix_rank(Eigen::MatrixXd::Zero(2, 3)) == 0);
  CHECK(matrix_rank(Eigen::MatrixXd::Identity(3, 3)) == 3);
  Eigen::MatrixXd a(2, 3);
  a << 1, 2, 3, 2, 4, 6;  // second row is a multiple of the first
  CHECK(matrix_rank(a) == 1);
  testing::Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd m = rng.matrix(3, 5);
    CHECK(matrix_rank(m) == Eigen::FullPivLU<Eigen::MatrixXd>(m).rank());
  }
}

TEST_CASE("problem save/load round-trips bit-identically") {
  const QpProblem p = load_problem(fixture("example2.json"));
  const fs::path tmp = fs::temp_directory_path() / "pnnqp_roundtrip.json";
  save_problem(p, tmp.string());
  const QpProblem q = load_problem(tmp.string());
  CHECK(p.Q == q.Q);
  CHECK(p.c == q.c);
  CHECK(p.A == q.A);
  CHECK(p.b == q.b);
  CHECK(p.B == q.B);
  CHECK(p.d == q.d);
  fs::remove(tmp);
}

TEST_CASE("both bundled fixtures validate") {
  CHECK(validate(load_problem(fixture("example1.json"))).all_pass());
  CHECK(validate(load_problem(fixture("example1_prose_B.json"))).all_pass());
  CHECK(validate(load_problem(fixture("example2.json"))).all_pass());
}
