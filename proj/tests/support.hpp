#pragma once

#include <complex>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "druopf/farm_case.hpp"
#include "druopf/network.hpp"

namespace testing {

inline std::string data_path(const std::string& name) { return std::string(DRUOPF_DATA_DIR) + "/" + name; }

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

inline const druopf::FarmCase& farm12() {
  static const druopf::FarmCase farm = druopf::load_farm_case_file(data_path("farm12.json"));
  return farm;
}
inline const druopf::FarmCase& farm1() {
  static const druopf::FarmCase farm = druopf::load_farm_case_file(data_path("farm1.json"));
  return farm;
}
inline const druopf::FarmCase& farm2() {
  static const druopf::FarmCase farm = druopf::load_farm_case_file(data_path("farm2.json"));
  return farm;
}

inline std::vector<double> uniform_p(const druopf::FarmCase& farm, double loading) {
  std::vector<double> p;
  for (const auto& t : farm.turbines) p.push_back(loading * t.p_max);
  return p;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random radial farm in p.u.: dru-ac root, optional pcc, 1..max_wt turbines
/// on a random tree of hv/collector buses. Parameters are kept in ranges
/// where the AC power flow has a solution.
inline druopf::FarmCase random_farm(std::mt19937_64& rng, std::size_t max_wt = 3, bool with_pcc = true) {
  using namespace druopf;
  PerUnitBase base;
  base.s_mva = 10.0;
  base.v_kv = {{"lv", 0.69}, {"mv", 33.0}};
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  auto add_bus = [&](const std::string& id, BusKind kind, const std::string& level, double shunt) {
    Bus b;
    b.id = id;
    b.kind = kind;
    b.level = level;
    b.v_min = 0.8;
    b.v_max = 1.2;
    b.shunt_c = shunt;
    buses.push_back(b);
    return buses.size() - 1;
  };
  auto add_branch = [&](std::size_t from, std::size_t to, const std::string& level, double r, double l, double c) {
    Branch br;
    br.from = from;
    br.to = to;
    br.r = r;
    br.l = l;
    br.c_half = c;
    br.s_max = 10.0;
    br.level = level;
    branches.push_back(br);
  };
  const std::size_t dru = add_bus("dru", BusKind::DruAc, "mv", uniform(rng, 0.0, 0.02));
  std::vector<std::size_t> attach{dru};
  if (with_pcc) {
    const std::size_t pcc = add_bus("pcc", BusKind::Pcc, "mv", 0.0);
    add_branch(pcc, dru, "mv", uniform(rng, 0.0005, 0.005), uniform(rng, 0.002, 0.02), uniform(rng, 0.0, 0.005));
    attach = {pcc};
  }
  std::uniform_int_distribution<std::size_t> n_dist(1, max_wt);
  const std::size_t n_wt = n_dist(rng);
  std::vector<TurbineUnit> turbines;
  for (std::size_t t = 0; t < n_wt; ++t) {
    const std::string id = std::to_string(t + 1);
    const std::size_t hv = add_bus("hv" + id, BusKind::TurbineHv, "mv", 0.0);
    const std::size_t parent = attach[std::uniform_int_distribution<std::size_t>(0, attach.size() - 1)(rng)];
    add_branch(parent, hv, "mv", uniform(rng, 0.001, 0.02), uniform(rng, 0.005, 0.05), uniform(rng, 0.0, 0.01));
    attach.push_back(hv);
    const std::size_t lv = add_bus("wt" + id, BusKind::TurbineLv, "lv", 0.0);
    add_branch(lv, hv, "lv", uniform(rng, 0.001, 0.01), uniform(rng, 0.02, 0.1), 0.0);
    TurbineUnit u;
    u.bus_id = "wt" + id;
    u.bus = lv;
    u.c_f = uniform(rng, 0.0, 0.02);
    u.n_tf = 1.0;
    u.l_tf = branches.back().l;
    u.p_max = uniform(rng, 0.3, 0.8);
    u.s_rating = u.p_max * uniform(rng, 1.05, 1.3);
    turbines.push_back(u);
  }
  DruStation st;
  st.bus_id = "dru";
  st.bus = dru;
  st.n_bridge = 1;
  st.l_c = uniform(rng, 0.03, 0.1);
  st.r_dc = uniform(rng, 0.0, 0.01);
  st.v_dc_onshore = uniform(rng, 0.85, 0.95);
  return FarmCase{NetworkModel(base, buses, branches), turbines, st, "random"};
}

/// Random complex vector with magnitudes in [0.8, 1.2].
inline std::vector<std::complex<double>> random_voltages(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::complex<double>> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(std::polar(uniform(rng, 0.8, 1.2), uniform(rng, -0.5, 0.5)));
  return v;
}

}  // namespace testing
