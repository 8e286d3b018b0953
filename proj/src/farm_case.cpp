#include "druopf/farm_case.hpp"

#include <cmath>

#include "druopf/error.hpp"
#include "druopf/units.hpp"
#include "json_util.hpp"

namespace druopf {

using nlohmann::json;

double FarmCase::p_farm_max() const {
  double p = 0.0;
  for (const auto& t : turbines) p += t.p_max;
  return p;
}

std::vector<double> FarmCase::filter_shunts() const {
  std::vector<double> c(net.n_buses(), 0.0);
  for (const auto& t : turbines) c[t.bus] += t.c_f;
  return c;
}

FarmModels FarmCase::models() const {
  if (turbines.empty()) throw Error(ErrorKind::Domain, "farm has no turbines");
  const LumpedEquivalent eq = aggregate_equivalents(net);
  FarmModels m;
  m.n_wt = turbines.size();
  const double n = static_cast<double>(m.n_wt);
  m.c_f = 0.0;
  m.n_tf = 0.0;
  m.l_tf = 0.0;
  for (const auto& t : turbines) {
    m.c_f += t.c_f / n;
    m.n_tf += t.n_tf / n;
    m.l_tf += t.l_tf / n;
  }
  m.l_net = eq.l_net;
  m.c_net = eq.c_net;
  m.p_farm_max = p_farm_max();
  m.dru = dru;
  return m;
}

namespace {

TurbineUnit load_turbine(const json& jt, const NetworkModel& net) {
  const PerUnitBase& base = net.base();
  const double wb = base.omega_base();
  TurbineUnit t;
  t.bus_id = detail::string(jt, "bus", "turbine");
  const std::string ctx = "turbine '" + t.bus_id + "'";
  const auto bus = net.find_bus(t.bus_id);
  if (!bus) throw Error(ErrorKind::Schema, ctx + ": unknown bus");
  t.bus = *bus;
  if (net.buses()[t.bus].kind != BusKind::TurbineLv) {
    throw Error(ErrorKind::Schema, ctx + ": turbines attach to turbine-lv buses");
  }
  const std::string& lv = net.buses()[t.bus].level;
  std::string hv = lv;
  for (std::size_t k : net.incidence()[t.bus]) {
    const auto& br = net.branches()[k];
    const std::size_t other = br.from == t.bus ? br.to : br.from;
    if (net.buses()[other].level != lv) {
      hv = net.buses()[other].level;
      break;
    }
  }
  const double zb = base.z_base(lv);
  t.c_f = wb * detail::number(jt, "c_f", ctx) * 1e-6 * zb;
  t.l_tf = wb * detail::number(jt, "l_tf", ctx) * 1e-3 / zb;
  t.n_tf = detail::number(jt, "n_tf", ctx) * base.v_kv.at(lv) / base.v_kv.at(hv);
  t.p_max = detail::number(jt, "p_max", ctx) / base.s_mva;
  t.s_rating = detail::number(jt, "s_rating", ctx) / base.s_mva;
  t.validate();
  return t;
}

DruStation load_dru(const json& jd, const NetworkModel& net) {
  const PerUnitBase& base = net.base();
  DruStation d;
  d.bus_id = detail::string(jd, "bus", "dru");
  const auto bus = net.find_bus(d.bus_id);
  if (!bus || *bus != net.dru_bus()) throw Error(ErrorKind::Schema, "dru: bus must be the dru-ac bus");
  d.bus = *bus;
  const double n_bridge = detail::number(jd, "n_bridge", "dru");
  if (n_bridge < 1.0 || n_bridge != std::floor(n_bridge)) {
    throw Error(ErrorKind::Schema, "dru: n_bridge must be an integer >= 1");
  }
  d.n_bridge = static_cast<int>(n_bridge);
  const double v_ll = detail::number(jd, "v_ac_bridge", "dru");
  if (!(v_ll > 0.0)) throw Error(ErrorKind::Schema, "dru: v_ac_bridge must be positive");
  const double v_dc_base = d.n_bridge * 3.0 * std::sqrt(2.0) / kPi * v_ll;  // kV
  const double i_dc_base = base.s_mva / v_dc_base;                         // kA
  d.l_c = base.omega_base() * detail::number(jd, "l_c", "dru") * 1e-3 * i_dc_base / (std::sqrt(2.0) * v_ll);
  d.r_dc = detail::number(jd, "r_dc", "dru") * base.s_mva / (v_dc_base * v_dc_base);
  d.v_dc_onshore = detail::number(jd, "v_dc_onshore", "dru") / v_dc_base;
  d.validate();
  return d;
}

}  // namespace

FarmCase load_farm_case(const json& doc) {
  FarmCase fc{load_network(doc), {}, {}, {}};
  if (doc.contains("description") && doc["description"].is_string()) fc.description = doc["description"];
  const json& jt = detail::require(doc, "turbines", "document");
  if (!jt.is_array()) throw Error(ErrorKind::Schema, "turbines must be an array");
  std::vector<bool> used(fc.net.n_buses(), false);
  for (const json& t : jt) {
    fc.turbines.push_back(load_turbine(t, fc.net));
    if (used[fc.turbines.back().bus]) throw Error(ErrorKind::Schema, "two turbines on bus '" + fc.turbines.back().bus_id + "'");
    used[fc.turbines.back().bus] = true;
  }
  if (fc.turbines.size() != fc.net.n_wt()) {
    throw Error(ErrorKind::Schema, "every turbine-lv bus needs exactly one turbine entry");
  }
  fc.dru = load_dru(detail::require(doc, "dru", "document"), fc.net);
  return fc;
}

FarmCase load_farm_case_file(const std::string& path) { return load_farm_case(detail::read_json_file(path)); }

}  // namespace druopf
