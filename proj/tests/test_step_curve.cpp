#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <vector>

#include "doctest.h"
#include "landmark/step_curve.hpp"

using landmark::StepSurvivalCurve;
using landmark::uniform_grid;

TEST_CASE("empty curve is the constant 1") {
  StepSurvivalCurve c;
  CHECK(c.at(0.0) == 1.0);
  CHECK(c.at(100.0) == 1.0);
  CHECK(c.at_left(5.0) == 1.0);
  CHECK(c.valid());
}

TEST_CASE("right continuity and left limits") {
  StepSurvivalCurve c{{1.0, 2.0, 4.0}, {0.8, 0.5, 0.2}};
  CHECK(c.valid());
  CHECK(c.at(0.999) == 1.0);
  CHECK(c.at(1.0) == 0.8);   // right-continuous at the jump
  CHECK(c.at_left(1.0) == 1.0);
  CHECK(c.at(1.5) == 0.8);
  CHECK(c.at_left(2.0) == 0.8);
  CHECK(c.at(2.0) == 0.5);
  CHECK(c.at(3.999) == 0.5);
  CHECK(c.at(4.0) == 0.2);
  CHECK(c.at(1e9) == 0.2);
}

TEST_CASE("validity catches broken curves") {
  CHECK_FALSE(StepSurvivalCurve{{1.0, 1.0}, {0.8, 0.5}}.valid());  // tied times
  CHECK_FALSE(StepSurvivalCurve{{2.0, 1.0}, {0.8, 0.5}}.valid());  // decreasing times
  CHECK_FALSE(StepSurvivalCurve{{1.0, 2.0}, {0.5, 0.8}}.valid());  // increasing values
  CHECK_FALSE(StepSurvivalCurve{{1.0}, {0.0}}.valid());            // leaves (0,1]
  CHECK_FALSE(StepSurvivalCurve{{1.0}, {1.2}}.valid());
  CHECK_FALSE(StepSurvivalCurve{{-1.0}, {0.5}}.valid());           // nonpositive time
}

TEST_CASE("sampling on a grid") {
  StepSurvivalCurve c{{1.0, 3.0}, {0.6, 0.3}};
  std::vector<double> out;
  c.sample({0.0, 1.0, 2.0, 3.0, 4.0}, out);
  CHECK(out == std::vector<double>{1.0, 0.6, 0.6, 0.3, 0.3});
}

TEST_CASE("uniform grid endpoints and spacing") {
  auto g = uniform_grid(0.0, 2.0, 5);
  REQUIRE(g.size() == 5);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 2.0);
  CHECK(g[1] == doctest::Approx(0.5));
  CHECK(g[3] == doctest::Approx(1.5));
}
