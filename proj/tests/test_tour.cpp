#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "visia/oracle.hpp"
#include "visia/tour.hpp"

#include <random>

using namespace visia;

namespace {

std::mt19937_64 rng(5);

double uniform(double lo, double hi) {
    const double u = double(rng() >> 11) * (1.0 / 9007199254740992.0);
    return lo + u * (hi - lo);
}

}  // namespace

TEST_CASE("tour_cost") {
    const std::vector<Eigen::Vector3d> pts{{0, 0, 0}, {3, 0, 0}, {3, 4, 0}};
    CHECK(tour::tour_cost(std::vector<int>{0}, pts) == 0.0);
    CHECK(tour::tour_cost(std::vector<int>{0, 1}, pts) == doctest::Approx(3.0));
    CHECK(tour::tour_cost(std::vector<int>{0, 1, 2}, pts) == doctest::Approx(7.0));
    CHECK_THROWS_AS((void)tour::tour_cost(std::vector<int>{}, pts), std::invalid_argument);

    // Recomputation oracle on random orders.
    for (int k = 0; k < 20; ++k) {
        std::vector<Eigen::Vector3d> rnd;
        for (int i = 0; i < 6; ++i) {
            rnd.emplace_back(uniform(0, 10), uniform(0, 10), uniform(0, 3));
        }
        std::vector<int> order{0, 1, 2, 3, 4, 5};
        double expect = 0.0;
        for (int i = 0; i + 1 < 6; ++i) expect += (rnd[i + 1] - rnd[i]).norm();
        CHECK(tour::tour_cost(order, rnd) == doctest::Approx(expect));
    }
}

TEST_CASE("reorder keeps a pure anchor chain unchanged") {
    tour::TourProblem p;
    p.positions = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    p.start = 0;
    p.anchors = {1, 2, 3};
    const auto sol = tour::reorder(p);
    CHECK(sol.order == std::vector<int>{0, 1, 2, 3});
    CHECK(sol.total_cost == doctest::Approx(3.0));
}

TEST_CASE("collinear free node inserts between anchors") {
    tour::TourProblem p;
    p.positions = {{-1, 0, 0}, {0, 0, 0}, {10, 0, 0}, {5, 0, 0}};  // start, A, B, X
    p.start = 0;
    p.anchors = {1, 2};
    const auto sol = tour::reorder(p);
    CHECK(sol.order == std::vector<int>{0, 1, 3, 2});
    CHECK(sol.total_cost == doctest::Approx(11.0));
}

TEST_CASE("terminal stays last") {
    tour::TourProblem p;
    p.positions = {{0, 0, 0}, {4, 0, 0}, {1, 1, 0}, {2, -1, 0}};
    p.start = 0;
    p.terminal = 1;
    const auto sol = tour::reorder(p);
    CHECK(sol.order.front() == 0);
    CHECK(sol.order.back() == 1);
    CHECK(tour::feasible(p, sol.order));
}

TEST_CASE("random instances: feasibility exact, cost within 10% of the enumeration optimum") {
    const auto suite = oracle::run_sop_suite({2024, 100, oracle::Inject::None});
    CHECK(suite.pass);
    CHECK(suite.cases == 100);
    if (!suite.pass) MESSAGE(suite.counterexample);
}

TEST_CASE("2-opt never increases cost over insertion alone") {
    for (int k = 0; k < 50; ++k) {
        tour::TourProblem p;
        const int n = 3 + int(rng() % 7);
        for (int i = 0; i < n; ++i) {
            p.positions.emplace_back(uniform(0, 10), uniform(0, 10), 0.0);
        }
        p.start = 0;
        const int n_anchor = int(rng() % std::max(1, n - 1));
        for (int i = 1; i <= n_anchor; ++i) p.anchors.push_back(i);

        const auto sol = tour::reorder(p);
        CHECK(tour::feasible(p, sol.order));
        CHECK(sol.total_cost == doctest::Approx(tour::tour_cost(sol.order, p.positions)));

        // Determinism under fixed input ordering.
        const auto sol2 = tour::reorder(p);
        CHECK(sol.order == sol2.order);
    }
}
