#include "druopf/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include "druopf/error.hpp"
#include "druopf/units.hpp"
#include "json_util.hpp"

namespace druopf {

using nlohmann::json;

double PerUnitBase::omega_base() const { return 2.0 * kPi * f_hz; }

double PerUnitBase::v_peak_kv(const std::string& level) const {
  auto it = v_kv.find(level);
  if (it == v_kv.end()) throw Error(ErrorKind::Schema, "unknown voltage level '" + level + "'");
  return std::sqrt(2.0 / 3.0) * it->second;
}

double PerUnitBase::z_base(const std::string& level) const {
  const double v = v_peak_kv(level);
  return v * v / s_mva;
}

void PerUnitBase::validate() const {
  if (!(s_mva > 0.0)) throw Error(ErrorKind::Schema, "base.s_mva must be positive");
  if (!(f_hz > 0.0)) throw Error(ErrorKind::Schema, "base.f_hz must be positive");
  if (v_kv.empty()) throw Error(ErrorKind::Schema, "base.v_kv needs at least one level");
  for (const auto& [name, kv] : v_kv) {
    if (!(kv > 0.0)) throw Error(ErrorKind::Schema, "base voltage of level '" + name + "' must be positive");
  }
}

std::string_view to_string(BusKind kind) {
  switch (kind) {
    case BusKind::TurbineLv: return "turbine-lv";
    case BusKind::TurbineHv: return "turbine-hv";
    case BusKind::Collector: return "collector";
    case BusKind::Pcc: return "pcc";
    case BusKind::DruAc: return "dru-ac";
  }
  return "collector";
}

BusKind bus_kind_from_string(std::string_view text) {
  for (BusKind k : {BusKind::TurbineLv, BusKind::TurbineHv, BusKind::Collector, BusKind::Pcc,
                    BusKind::DruAc}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorKind::Schema, "unknown bus kind '" + std::string(text) + "'");
}

NetworkModel::NetworkModel(PerUnitBase base, std::vector<Bus> buses, std::vector<Branch> branches)
    : base_(std::move(base)), buses_(std::move(buses)), branches_(std::move(branches)) {
  base_.validate();
  if (buses_.empty()) throw Error(ErrorKind::Schema, "network has no buses");

  std::size_t n_pcc = 0;
  std::size_t n_dru = 0;
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    const Bus& b = buses_[i];
    if (b.id.empty()) throw Error(ErrorKind::Schema, "bus with empty id");
    for (std::size_t j = 0; j < i; ++j) {
      if (buses_[j].id == b.id) throw Error(ErrorKind::Schema, "duplicate bus id '" + b.id + "'");
    }
    if (!base_.v_kv.contains(b.level)) {
      throw Error(ErrorKind::Schema, "bus '" + b.id + "' references unknown level '" + b.level + "'");
    }
    if (!(b.v_min > 0.0) || !(b.v_min <= b.v_max)) {
      throw Error(ErrorKind::Schema, "bus '" + b.id + "' needs 0 < v_min <= v_max");
    }
    if (!(b.shunt_c >= 0.0)) throw Error(ErrorKind::Schema, "bus '" + b.id + "' has negative shunt_c");
    if (b.kind == BusKind::TurbineLv) ++n_wt_;
    if (b.kind == BusKind::Pcc) {
      ++n_pcc;
      pcc_bus_ = i;
    }
    if (b.kind == BusKind::DruAc) {
      ++n_dru;
      dru_bus_ = i;
    }
  }
  if (n_dru != 1) throw Error(ErrorKind::Schema, "network needs exactly one dru-ac bus");
  if (n_pcc > 1) throw Error(ErrorKind::Schema, "network has more than one pcc bus");
  if (n_pcc == 0) pcc_bus_ = dru_bus_;

  incidence_.assign(buses_.size(), {});
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    const Branch& br = branches_[k];
    if (br.from >= buses_.size() || br.to >= buses_.size()) {
      throw Error(ErrorKind::Schema, "branch " + std::to_string(k) + " has unknown endpoint");
    }
    if (br.from == br.to) throw Error(ErrorKind::Schema, "branch " + std::to_string(k) + " is a self loop");
    if (!(br.r >= 0.0) || !(br.l >= 0.0) || !(br.c_half >= 0.0)) {
      throw Error(ErrorKind::Schema, "branch " + std::to_string(k) + " has negative r, l or c_half");
    }
    if (!(br.s_max > 0.0)) throw Error(ErrorKind::Schema, "branch " + std::to_string(k) + " needs s_max > 0");
    incidence_[br.from].push_back(k);
    incidence_[br.to].push_back(k);
  }

  std::vector<bool> seen(buses_.size(), false);
  std::queue<std::size_t> frontier;
  frontier.push(dru_bus_);
  seen[dru_bus_] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop();
    for (std::size_t k : incidence_[i]) {
      const std::size_t j = branches_[k].from == i ? branches_[k].to : branches_[k].from;
      if (!seen[j]) {
        seen[j] = true;
        ++reached;
        frontier.push(j);
      }
    }
  }
  if (reached != buses_.size()) throw Error(ErrorKind::Topology, "network graph is disconnected");
  topology_ = branches_.size() + 1 == buses_.size() ? Topology::Radial : Topology::Meshed;
}

std::optional<std::size_t> NetworkModel::find_bus(std::string_view id) const {
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (buses_[i].id == id) return i;
  }
  return std::nullopt;
}

std::size_t NetworkModel::bus_index(std::string_view id) const {
  if (auto i = find_bus(id)) return *i;
  throw Error(ErrorKind::Schema, "unknown bus '" + std::string(id) + "'");
}

bool NetworkModel::is_turbine_transformer(std::size_t branch) const {
  const auto a = buses_[branches_[branch].from].kind;
  const auto b = buses_[branches_[branch].to].kind;
  return (a == BusKind::TurbineLv && b == BusKind::TurbineHv) ||
         (a == BusKind::TurbineHv && b == BusKind::TurbineLv);
}

NetworkModel load_network(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::Schema, "network document must be an object");
  const json& jb = detail::require(doc, "base", "document");
  PerUnitBase base;
  base.s_mva = detail::number(jb, "s_mva", "base");
  base.f_hz = detail::number(jb, "f_hz", "base");
  const json& levels = detail::require(jb, "v_kv", "base");
  if (!levels.is_object()) throw Error(ErrorKind::Schema, "base.v_kv must be an object");
  for (const auto& [name, value] : levels.items()) {
    if (!value.is_number()) throw Error(ErrorKind::Schema, "base.v_kv." + name + " must be a number");
    base.v_kv[name] = value.get<double>();
  }
  base.validate();
  const double wb = base.omega_base();

  std::vector<Bus> buses;
  const json& jbuses = detail::require(doc, "buses", "document");
  if (!jbuses.is_array()) throw Error(ErrorKind::Schema, "buses must be an array");
  for (const json& jbus : jbuses) {
    Bus b;
    b.id = detail::string(jbus, "id", "bus");
    const std::string ctx = "bus '" + b.id + "'";
    b.kind = bus_kind_from_string(detail::string(jbus, "kind", ctx));
    b.level = detail::string(jbus, "level", ctx);
    b.v_min = detail::number(jbus, "v_min", ctx);
    b.v_max = detail::number(jbus, "v_max", ctx);
    const double c_uf = detail::number_or(jbus, "shunt_c", ctx, 0.0);
    b.shunt_c = wb * c_uf * 1e-6 * base.z_base(b.level);
    buses.push_back(std::move(b));
  }

  auto find = [&](const std::string& id) -> std::size_t {
    for (std::size_t i = 0; i < buses.size(); ++i) {
      if (buses[i].id == id) return i;
    }
    throw Error(ErrorKind::Schema, "unknown endpoint '" + id + "'");
  };

  std::vector<Branch> branches;
  const json& jbranches = detail::require(doc, "branches", "document");
  if (!jbranches.is_array()) throw Error(ErrorKind::Schema, "branches must be an array");
  for (const json& jbr : jbranches) {
    Branch br;
    const std::string from = detail::string(jbr, "from", "branch");
    const std::string to = detail::string(jbr, "to", "branch");
    const std::string ctx = "branch " + from + "-" + to;
    br.from = find(from);
    br.to = find(to);
    br.level = jbr.contains("level") ? detail::string(jbr, "level", ctx) : buses[br.from].level;
    const double zb = base.z_base(br.level);
    br.r = detail::number(jbr, "r", ctx) / zb;
    br.l = wb * detail::number(jbr, "l", ctx) * 1e-3 / zb;
    br.c_half = wb * detail::number_or(jbr, "c_half", ctx, 0.0) * 1e-6 * zb;
    br.s_max = detail::number(jbr, "s_max", ctx) / base.s_mva;
    branches.push_back(std::move(br));
  }
  return NetworkModel(std::move(base), std::move(buses), std::move(branches));
}

NetworkModel load_network_file(const std::string& path) { return load_network(detail::read_json_file(path)); }

json save_network(const NetworkModel& net) {
  const PerUnitBase& base = net.base();
  const double wb = base.omega_base();
  json doc = json::object();
  json levels = json::object();
  for (const auto& [name, kv] : base.v_kv) levels[name] = kv;
  doc["base"] = {{"s_mva", base.s_mva}, {"v_kv", levels}, {"f_hz", base.f_hz}};
  json buses = json::array();
  for (const Bus& b : net.buses()) {
    buses.push_back({{"id", b.id},
                     {"kind", std::string(to_string(b.kind))},
                     {"level", b.level},
                     {"v_min", b.v_min},
                     {"v_max", b.v_max},
                     {"shunt_c", b.shunt_c / (wb * base.z_base(b.level)) * 1e6}});
  }
  doc["buses"] = buses;
  json branches = json::array();
  for (const Branch& br : net.branches()) {
    const double zb = base.z_base(br.level);
    branches.push_back({{"from", net.buses()[br.from].id},
                        {"to", net.buses()[br.to].id},
                        {"level", br.level},
                        {"r", br.r * zb},
                        {"l", br.l * zb / wb * 1e3},
                        {"c_half", br.c_half / (wb * zb) * 1e6},
                        {"s_max", br.s_max * base.s_mva}});
  }
  doc["branches"] = branches;
  return doc;
}

AdmittanceTable build_admittance(const NetworkModel& net, double omega,
                                 const std::vector<double>& extra_shunt_c) {
  if (!(omega > 0.0)) throw Error(ErrorKind::Domain, "omega must be positive");
  if (!extra_shunt_c.empty() && extra_shunt_c.size() != net.n_buses()) {
    throw Error(ErrorKind::Domain, "extra shunt vector does not match bus count");
  }
  AdmittanceTable table;
  table.omega = omega;
  table.bus_shunt.assign(net.n_buses(), 0.0);
  for (std::size_t i = 0; i < net.n_buses(); ++i) {
    double c = net.buses()[i].shunt_c;
    if (!extra_shunt_c.empty()) c += extra_shunt_c[i];
    table.bus_shunt[i] = omega * c;
  }
  for (std::size_t k = 0; k < net.n_branches(); ++k) {
    const Branch& br = net.branches()[k];
    if (br.r == 0.0 && br.l == 0.0) {
      throw Error(ErrorKind::Degenerate, "branch " + std::to_string(k) + " has zero series impedance");
    }
    BranchAdmittance y;
    y.series = 1.0 / std::complex<double>(br.r, omega * br.l);
    y.shunt_from = omega * br.c_half;
    y.shunt_to = omega * br.c_half;
    table.bus_shunt[br.from] += y.shunt_from;
    table.bus_shunt[br.to] += y.shunt_to;
    table.branches.push_back(y);
  }
  return table;
}

LumpedEquivalent aggregate_equivalents(const NetworkModel& net) {
  if (net.topology() != Topology::Radial) {
    throw Error(ErrorKind::Topology, "lumped equivalents need a radial network");
  }
  LumpedEquivalent eq;
  for (const Bus& b : net.buses()) eq.c_net += b.shunt_c;
  for (const Branch& br : net.branches()) eq.c_net += 2.0 * br.c_half;
  if (net.n_wt() == 0) return eq;

  // Root the tree at the pcc and count turbines below every branch.
  const std::size_t n = net.n_buses();
  const std::size_t root = net.pcc_bus();
  std::vector<std::size_t> order;
  std::vector<std::size_t> parent_branch(n, SIZE_MAX);
  std::vector<bool> seen(n, false);
  order.push_back(root);
  seen[root] = true;
  for (std::size_t head = 0; head < order.size(); ++head) {
    const std::size_t i = order[head];
    for (std::size_t k : net.incidence()[i]) {
      const auto& br = net.branches()[k];
      const std::size_t j = br.from == i ? br.to : br.from;
      if (!seen[j]) {
        seen[j] = true;
        parent_branch[j] = k;
        order.push_back(j);
      }
    }
  }
  std::vector<double> below(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (net.buses()[i].kind == BusKind::TurbineLv) below[i] = 1.0;
  }
  const double n_wt = static_cast<double>(net.n_wt());
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t i = *it;
    const std::size_t k = parent_branch[i];
    if (k == SIZE_MAX) continue;
    const auto& br = net.branches()[k];
    const std::size_t up = br.from == i ? br.to : br.from;
    below[up] += below[i];
    if (!net.is_turbine_transformer(k)) {
      const double share = below[i] / n_wt;
      eq.l_net += br.l * share * share;
    }
  }
  return eq;
}

}  // namespace druopf
