#include <doctest.h>

#include <cmath>
#include <complex>

#include "druopf/error.hpp"
#include "druopf/network.hpp"
#include "support.hpp"

using namespace druopf;
using nlohmann::json;

namespace {

json two_bus_doc() {
  return json::parse(R"({
    "base": {"s_mva": 10.0, "f_hz": 50.0, "v_kv": {"mv": 33.0}},
    "buses": [
      {"id": "pcc", "kind": "pcc", "level": "mv", "v_min": 0.9, "v_max": 1.1},
      {"id": "dru", "kind": "dru-ac", "level": "mv", "v_min": 0.9, "v_max": 1.1}
    ],
    "branches": [{"from": "pcc", "to": "dru", "r": 0.01, "l": 0.0, "c_half": 0.0, "s_max": 20.0}]
  })");
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Usage;
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("minimal two-bus document") {
  const NetworkModel net = load_network(two_bus_doc());
  CHECK(net.n_buses() == 2);
  CHECK(net.n_branches() == 1);
  CHECK(net.topology() == Topology::Radial);
  CHECK(net.n_wt() == 0);
  CHECK(net.buses()[net.dru_bus()].id == "dru");
  CHECK(net.buses()[net.pcc_bus()].id == "pcc");
}

TEST_CASE("unknown branch endpoint is a schema error") {
  json doc = two_bus_doc();
  doc["branches"][0]["to"] = "b99";
  try {
    load_network(doc);
    FAIL("accepted unknown endpoint");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Schema);
    CHECK(std::string(e.what()).find("unknown endpoint") != std::string::npos);
  }
}

TEST_CASE("schema violations") {
  json missing = two_bus_doc();
  missing["buses"][0].erase("kind");
  CHECK(kind_of([&] { load_network(missing); }) == ErrorKind::Schema);

  json dup = two_bus_doc();
  dup["buses"][1]["id"] = "pcc";
  CHECK(kind_of([&] { load_network(dup); }) == ErrorKind::Schema);

  json wrong_type = two_bus_doc();
  wrong_type["branches"][0]["r"] = "0.01";
  CHECK(kind_of([&] { load_network(wrong_type); }) == ErrorKind::Schema);

  json disconnected = two_bus_doc();
  disconnected["buses"].push_back({{"id", "c1"}, {"kind", "collector"}, {"level", "mv"}, {"v_min", 0.9}, {"v_max", 1.1}});
  CHECK(kind_of([&] { load_network(disconnected); }) == ErrorKind::Topology);

  json bad_bounds = two_bus_doc();
  bad_bounds["buses"][0]["v_min"] = 1.2;
  CHECK(kind_of([&] { load_network(bad_bounds); }) == ErrorKind::Schema);
}

TEST_CASE("reference fixture has twelve turbines on a radial tree") {
  const auto& farm = testing::farm12();
  CHECK(farm.net.n_wt() == 12);
  CHECK(farm.net.topology() == Topology::Radial);
  CHECK(farm.net.n_branches() + 1 == farm.net.n_buses());
}

TEST_CASE("series admittances") {
  PerUnitBase base;
  base.v_kv = {{"mv", 33.0}};
  auto make = [&](double r, double l) {
    std::vector<Bus> buses(2);
    buses[0] = {"a", BusKind::Pcc, "mv"};
    buses[1] = {"b", BusKind::DruAc, "mv"};
    Branch br;
    br.from = 0;
    br.to = 1;
    br.r = r;
    br.l = l;
    br.c_half = 0.02;
    return NetworkModel(base, buses, {br});
  };
  {
    const auto t = build_admittance(make(0.01, 0.0), 1.0);
    CHECK(t.branches[0].series.real() == doctest::Approx(100.0).epsilon(1e-14));
    CHECK(t.branches[0].series.imag() == doctest::Approx(0.0));
  }
  {
    const auto t = build_admittance(make(0.0, 0.1), 1.0);
    CHECK(t.branches[0].series.real() == doctest::Approx(0.0));
    CHECK(t.branches[0].series.imag() == doctest::Approx(-10.0).epsilon(1e-14));
  }
  {
    // 1/(0.01 + j0.105), 40-digit evaluation
    const auto t = build_admittance(make(0.01, 0.1), 1.05);
    CHECK(std::abs(t.branches[0].series.real() - 0.8988764044943820224719) < 1e-13);
    CHECK(std::abs(t.branches[0].series.imag() + 9.438202247191011235955) < 1e-13);
    CHECK(t.branches[0].shunt_from == doctest::Approx(1.05 * 0.02));
    CHECK(t.branches[0].shunt_to == doctest::Approx(1.05 * 0.02));
  }
  CHECK(kind_of([&] { build_admittance(make(0.0, 0.0), 1.0); }) == ErrorKind::Degenerate);
  CHECK(kind_of([&] { build_admittance(make(0.01, 0.1), 0.0); }) == ErrorKind::Domain);
}

TEST_CASE("admittance frequency scaling touches only the reactance") {
  const auto& net = testing::farm12().net;
  const auto a1 = build_admittance(net, 1.0);
  const double w = 1.037;
  const auto aw = build_admittance(net, w);
  for (std::size_t k = 0; k < net.n_branches(); ++k) {
    const auto& br = net.branches()[k];
    const std::complex<double> expect = 1.0 / std::complex<double>(br.r, w * br.l);
    CHECK(std::abs(aw.branches[k].series - expect) <= 1e-12 * std::abs(expect));
    CHECK(aw.branches[k].shunt_from == doctest::Approx(w * a1.branches[k].shunt_from));
  }
}

TEST_CASE("lumped equivalents") {
  PerUnitBase base;
  base.v_kv = {{"lv", 0.69}, {"mv", 33.0}};
  SUBCASE("one branch") {
    std::vector<Bus> buses{{"wt", BusKind::TurbineLv, "lv"}, {"pcc", BusKind::Pcc, "mv"}, {"dru", BusKind::DruAc, "mv"}};
    Branch tf{0, 1, 0.0, 0.05, 0.0, 1.0, "lv"};
    Branch cable{1, 2, 0.01, 0.1, 0.02, 1.0, "mv"};
    // turbine transformer excluded, cable beyond the pcc carries no farm share
    const auto eq = aggregate_equivalents(NetworkModel(base, buses, {tf, cable}));
    CHECK(eq.c_net == doctest::Approx(0.04));
  }
  SUBCASE("single feeder branch and parallel halving") {
    std::vector<Bus> one{{"wt1", BusKind::TurbineLv, "lv"}, {"hv1", BusKind::TurbineHv, "mv"},
                         {"dru", BusKind::DruAc, "mv"}};
    const auto eq1 = aggregate_equivalents(
        NetworkModel(base, one, {Branch{0, 1, 0.0, 0.05, 0.0, 1.0, "lv"}, Branch{1, 2, 0.0, 0.1, 0.02, 1.0, "mv"}}));
    CHECK(eq1.l_net == doctest::Approx(0.1));
    CHECK(eq1.c_net == doctest::Approx(0.04));

    std::vector<Bus> two{{"wt1", BusKind::TurbineLv, "lv"}, {"hv1", BusKind::TurbineHv, "mv"},
                         {"wt2", BusKind::TurbineLv, "lv"}, {"hv2", BusKind::TurbineHv, "mv"},
                         {"dru", BusKind::DruAc, "mv"}};
    const auto eq2 = aggregate_equivalents(NetworkModel(
        base, two,
        {Branch{0, 1, 0.0, 0.05, 0.0, 1.0, "lv"}, Branch{1, 4, 0.0, 0.1, 0.0, 1.0, "mv"},
         Branch{2, 3, 0.0, 0.05, 0.0, 1.0, "lv"}, Branch{3, 4, 0.0, 0.1, 0.0, 1.0, "mv"}}));
    CHECK(eq2.l_net == doctest::Approx(0.05));
    CHECK(eq2.c_net == 0.0);
  }
  SUBCASE("meshed network is rejected") {
    std::vector<Bus> buses{{"a", BusKind::Pcc, "mv"}, {"b", BusKind::Collector, "mv"}, {"dru", BusKind::DruAc, "mv"}};
    NetworkModel net(base, buses,
                     {Branch{0, 1, 0.01, 0.1, 0.0, 1.0, "mv"}, Branch{1, 2, 0.01, 0.1, 0.0, 1.0, "mv"},
                      Branch{0, 2, 0.01, 0.1, 0.0, 1.0, "mv"}});
    CHECK(net.topology() == Topology::Meshed);
    CHECK(kind_of([&] { aggregate_equivalents(net); }) == ErrorKind::Topology);
  }
}

TEST_CASE("fixture lumped inductance by hand summation over feeder paths") {
  // Each feeder cable section k (0 = nearest the pcc) carries (6 - k)/12 of
  // the farm current when every turbine injects the same current.
  const json doc = testing::read_json(testing::data_path("farm12.json"));
  const double s = doc["base"]["s_mva"], kv = doc["base"]["v_kv"]["mv"], f = doc["base"]["f_hz"];
  const double zb = 2.0 / 3.0 * kv * kv / s;
  const double wb = 2.0 * M_PI * f;
  double l_net = 0.0, c_net = 0.0;
  for (const auto& br : doc["branches"]) {
    if (br.contains("level") && br["level"] == "lv") continue;
    c_net += 2.0 * wb * br["c_half"].get<double>() * 1e-6 * zb;
    const std::string to = br["to"];
    if (to == "dru") continue;
    const int n = std::stoi(to.substr(2));
    const double share = (6.0 - (n - 1) % 6) / 12.0;
    l_net += wb * br["l"].get<double>() * 1e-3 / zb * share * share;
  }
  for (const auto& b : doc["buses"]) {
    if (b.contains("shunt_c")) c_net += wb * b["shunt_c"].get<double>() * 1e-6 * zb;
  }
  const auto eq = aggregate_equivalents(testing::farm12().net);
  CHECK(eq.l_net == doctest::Approx(l_net).epsilon(1e-12));
  CHECK(eq.c_net == doctest::Approx(c_net).epsilon(1e-12));
  // frozen
  CHECK(eq.l_net == doctest::Approx(0.028247408692745692).epsilon(1e-12));
  CHECK(eq.c_net == doctest::Approx(0.059984941809112784).epsilon(1e-12));
}

TEST_CASE("save and load round trip") {
  const auto& net = testing::farm12().net;
  const NetworkModel again = load_network(save_network(net));
  REQUIRE(again.n_buses() == net.n_buses());
  REQUIRE(again.n_branches() == net.n_branches());
  for (std::size_t i = 0; i < net.n_buses(); ++i) {
    CHECK(again.buses()[i].id == net.buses()[i].id);
    CHECK(again.buses()[i].kind == net.buses()[i].kind);
    CHECK(again.buses()[i].v_min == net.buses()[i].v_min);
    CHECK(again.buses()[i].shunt_c == doctest::Approx(net.buses()[i].shunt_c).epsilon(1e-14));
  }
  for (std::size_t k = 0; k < net.n_branches(); ++k) {
    const auto &a = again.branches()[k], &b = net.branches()[k];
    CHECK(a.from == b.from);
    CHECK(a.to == b.to);
    CHECK(a.r == doctest::Approx(b.r).epsilon(1e-14));
    CHECK(a.l == doctest::Approx(b.l).epsilon(1e-14));
    CHECK(a.c_half == doctest::Approx(b.c_half).epsilon(1e-14));
    CHECK(a.s_max == doctest::Approx(b.s_max).epsilon(1e-14));
  }
}

}  // TEST_SUITE
