#include <dsr/instance_io.hpp>
#include <dsr/model.hpp>

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dsr;

namespace {

VectorQ tandem_z(int z12, int z23, int z35) {
  VectorQ z(3);
  z << Rational(z12), Rational(z23), Rational(z35);
  return z;
}

RepairInstance tandem_with(const CostFunction& cost) {
  return RepairInstance(Topology({1, 2, 3, 4, 5}, {{1, 2}, {2, 3}, {3, 5}}, {cost, cost, cost}, "tandem"), 4, 5,
                        4, 2);
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("total cost of the tandem optimum is 4") {
    const RepairInstance inst = builtin_instance("tandem4");
    CHECK(total_cost(inst, tandem_z(0, 2, 2)) == 4);
  }

  TEST_CASE("zero subgraph costs nothing") {
    const RepairInstance inst = builtin_instance("grid2x3");
    CHECK(total_cost(inst, uniform_subgraph(inst, Rational(0))) == 0);
  }

  TEST_CASE("quadratic tandem costs 8 at (0,2,2)") {
    const RepairInstance inst = tandem_with(CostFunction::quadratic(1, 0));
    CHECK(total_cost(inst, tandem_z(0, 2, 2)) == 8);
  }

  TEST_CASE("cost derivatives") {
    CHECK(cost_derivative(CostFunction::linear(3), Rational(5)) == 3);
    CHECK(cost_derivative(CostFunction::quadratic(1, 0), Rational(2)) == 4);
    CHECK(cost_derivative(CostFunction::quadratic(2, 1), Rational(0)) == 1);
    CHECK_THROWS_AS(cost_derivative(CostFunction::linear(1), Rational(-1)), DomainError);
    CHECK_THROWS_AS(cost_derivative(CostFunction::linear(1), -0.5), DomainError);
  }

  TEST_CASE("derivatives match central differences") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> point(0.01, 8.0);
    const std::vector<CostFunction> costs = {
        CostFunction::linear(Rational(3, 2)), CostFunction::quadratic(Rational(1, 3), 2),
        CostFunction::custom([](double z) { return std::exp(z / 4) - 1; },
                             [](double z) { return std::exp(z / 4) / 4; })};
    for (const CostFunction& f : costs) {
      for (int i = 0; i < 100; ++i) {
        const double z = point(rng);
        const double h = 1e-5 * std::max(1.0, z);
        const double fd = (f.value(z + h) - f.value(z - h)) / (2 * h);
        const double exact_d = f.derivative(z);
        CHECK(std::abs(fd - exact_d) <= 1e-6 * std::max(1.0, std::abs(exact_d)));
      }
    }
  }

  TEST_CASE("total cost is convex") {
    const RepairInstance inst = tandem_with(CostFunction::quadratic(Rational(1, 2), 1));
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> entry(0, 16);
    std::uniform_int_distribution<int> weight(0, 8);
    for (int i = 0; i < 100; ++i) {
      VectorQ a(3);
      VectorQ b(3);
      for (int l = 0; l < 3; ++l) {
        a(l) = Rational(entry(rng), 4);
        b(l) = Rational(entry(rng), 4);
      }
      const Rational theta(weight(rng), 8);
      const VectorQ mix = theta * a + (1 - theta) * b;
      CHECK(total_cost(inst, mix) <= theta * total_cost(inst, a) + (1 - theta) * total_cost(inst, b));
    }
  }

  TEST_CASE("tilted argmin breaks ties toward zero") {
    const CostFunction unit = CostFunction::linear(1);
    CHECK(unit.argmin_tilted(0.0, 4.0) == 0.0);
    CHECK(unit.argmin_tilted(1.0, 4.0) == 0.0);
    CHECK(unit.argmin_tilted(2.0, 4.0) == 4.0);
    const CostFunction quad = CostFunction::quadratic(1, 0);
    CHECK(quad.argmin_tilted(2.0, 4.0) == doctest::Approx(1.0));
    CHECK(quad.argmin_tilted(100.0, 4.0) == 4.0);
  }

  TEST_CASE("tandem4 builtin") {
    const RepairInstance inst = builtin_instance("tandem4");
    REQUIRE(inst.num_links() == 3);
    CHECK(inst.links()[0] == Link{1, 2});
    CHECK(inst.links()[1] == Link{2, 3});
    CHECK(inst.links()[2] == Link{3, 5});
    CHECK(inst.alpha() == 2);
    CHECK(inst.n() == 4);
    CHECK(inst.k() == 2);
    CHECK(inst.file_size() == 4);
    CHECK(inst.failed() == 4);
    CHECK(inst.new_node() == 5);
    CHECK(total_cost(inst, uniform_subgraph(inst, inst.file_size())) == 12);
  }

  TEST_CASE("grid2x3 builtin") {
    const RepairInstance inst = builtin_instance("grid2x3");
    CHECK(inst.alpha() == 2);
    CHECK(inst.n() == 6);
    CHECK(inst.k() == 4);
    CHECK(inst.file_size() == 8);
    CHECK(inst.failed() == 1);
    CHECK(inst.new_node() == 7);
    CHECK(inst.num_links() == 7);
    CHECK_THROWS_AS(builtin_instance("ring9"), StructuralError);
  }

  TEST_CASE("instance validation") {
    const auto unit = CostFunction::linear(1);
    auto make = [&](std::vector<Link> links, Rational m, int k) {
      std::vector<CostFunction> costs(links.size(), unit);
      return RepairInstance(Topology({1, 2, 3, 4, 5}, links, costs), 4, 5, m, k);
    };
    CHECK_NOTHROW(make({{1, 2}, {2, 3}, {3, 5}}, 4, 2));
    CHECK_THROWS_AS(make({{1, 2}, {2, 3}, {3, 5}}, 4, 4), StructuralError);
    CHECK_THROWS_AS(make({{1, 2}, {2, 3}, {3, 5}}, 4, 0), StructuralError);
    CHECK_THROWS_AS(make({{1, 2}, {2, 3}, {3, 5}}, 5, 2), StructuralError);
    CHECK_THROWS_AS(make({{1, 2}, {2, 3}, {3, 4}}, 4, 2), StructuralError);
    CHECK_THROWS_AS(make({{1, 2}, {2, 3}}, 4, 2), InfeasibleInstance);
    CHECK_THROWS_AS(make({{1, 2}, {2, 1}, {2, 3}, {3, 5}}, 4, 2), StructuralError);
    CHECK_THROWS_AS(make({{1, 2}, {2, 3}, {3, 5}, {5, 1}}, 4, 2), StructuralError);
    CHECK_THROWS_AS(Topology({1, 2}, {{1, 1}}, {unit}), StructuralError);
    CHECK_THROWS_AS(Topology({1, 2}, {{1, 2}, {1, 2}}, {unit, unit}), StructuralError);
    CHECK_THROWS_AS(Topology({1, 2}, {{1, 3}}, {unit}), StructuralError);
  }

  TEST_CASE("subgraph checks") {
    const RepairInstance inst = builtin_instance("tandem4");
    CHECK_THROWS_AS(check_subgraph(inst, VectorQ(VectorQ::Zero(2))), StructuralError);
    CHECK_THROWS_AS(check_subgraph(inst, tandem_z(0, -1, 2)), StructuralError);
    CHECK_THROWS_AS(total_cost(inst, VectorQ(VectorQ::Zero(2))), StructuralError);
    const VectorQ z = subgraph_from_map(inst, {{{1, 2}, 0}, {{2, 3}, 2}, {{3, 5}, 2}});
    CHECK(z == tandem_z(0, 2, 2));
    CHECK_THROWS_AS(subgraph_from_map(inst, {{{1, 2}, 0}, {{2, 3}, 2}}), StructuralError);
    CHECK_THROWS_AS(subgraph_from_map(inst, {{{1, 2}, 0}, {{2, 3}, 2}, {{3, 5}, 2}, {{1, 5}, 1}}),
                    StructuralError);
  }

  TEST_CASE("layout repair keeps positions") {
    const Layout tandem = tandem4_layout();
    const RepairInstance middle = tandem.repair_instance(2);
    CHECK(middle.new_node() == 5);
    for (const Link& l : middle.links()) CHECK((l.to == 5 || l.to != 2));
    const Layout next = tandem.after_repair(2, 5);
    CHECK(next.occupants() == std::vector<NodeId>{1, 5, 3, 4});
    CHECK(next.next_id() == 6);
    const RepairInstance again = next.repair_instance(4);
    CHECK(again.new_node() == 6);
    CHECK(again.links() == std::vector<Link>{{1, 5}, {3, 6}, {5, 3}});
  }
}

TEST_SUITE("instance_io") {
  TEST_CASE("round trip") {
    const RepairInstance inst = builtin_instance("grid2x3");
    const RepairInstance back = parse_instance(instance_to_json(inst));
    CHECK(back.links() == inst.links());
    CHECK(back.failed() == inst.failed());
    CHECK(back.new_node() == inst.new_node());
    CHECK(back.file_size() == inst.file_size());
    CHECK(back.k() == inst.k());
  }

  TEST_CASE("rational and quadratic coefficients") {
    const RepairInstance inst = parse_instance(R"({
      "nodes": [1, 2, 3], "failed": 1, "new": 3, "M": 2, "k": 1,
      "links": [{"from": 2, "to": 3, "cost": {"kind": "quadratic", "coeffs": ["1/2", "0.25"]}}]
    })");
    REQUIRE(inst.num_links() == 1);
    CHECK(inst.cost(0).coeffs()[0] == Rational(1, 2));
    CHECK(inst.cost(0).coeffs()[1] == Rational(1, 4));
  }

  TEST_CASE("malformed files are rejected") {
    CHECK_THROWS_AS(parse_instance(""), StructuralError);
    CHECK_THROWS_AS(parse_instance("{}"), StructuralError);
    CHECK_THROWS_AS(parse_instance(R"({"nodes": [1, 2, 3], "failed": 1, "new": 3, "M": 2, "k": 1,
      "links": [{"from": 2, "to": 3, "cost": {"kind": "linear", "coeffs": [1]}}], "extra": 0})"),
                    StructuralError);
    CHECK_THROWS_AS(parse_instance(R"({"nodes": [1, 2, 3], "failed": 1, "new": 3, "M": 2, "k": 1,
      "links": [{"from": 2, "to": 3, "cost": {"kind": "cubic", "coeffs": [1]}}]})"),
                    StructuralError);
    CHECK_THROWS_AS(load_instance("/nonexistent/instance.json"), StructuralError);
  }
}

TEST_SUITE("instance_io") {
  TEST_CASE("rational literals are read in base 10") {
    CHECK(parse_rational("0.25") == Rational(1, 4));
    CHECK(parse_rational("010") == 10);
    CHECK(parse_rational("-07/014") == Rational(-1, 2));
    CHECK(parse_rational(".5") == Rational(1, 2));
    CHECK_THROWS_AS(parse_rational("1/0"), StructuralError);
    CHECK_THROWS_AS(parse_rational("0x10"), StructuralError);
    CHECK_THROWS_AS(parse_rational("1."), StructuralError);
  }
}
