#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace druopf {

/// Base quantities of the per-unit system.
///
/// Each voltage level carries a line-to-line rms voltage in kV; internally the
/// base voltage is the corresponding peak phase value, so that a bus at
/// nominal voltage sits at |V| = 1.0.
struct PerUnitBase {
  double s_mva = 100.0;
  std::map<std::string, double> v_kv;  // level name -> nominal line-line kV
  double f_hz = 50.0;

  double omega_base() const;
  /// Peak phase base voltage of a level, in kV.
  double v_peak_kv(const std::string& level) const;
  /// Impedance base of a level, in ohm.
  double z_base(const std::string& level) const;
  void validate() const;
};

enum class BusKind { TurbineLv, TurbineHv, Collector, Pcc, DruAc };

std::string_view to_string(BusKind kind);
BusKind bus_kind_from_string(std::string_view text);

struct Bus {
  std::string id;
  BusKind kind = BusKind::Collector;
  std::string level;
  double v_min = 0.9;
  double v_max = 1.1;
  double shunt_c = 0.0;  // p.u., susceptance = omega * shunt_c
};

struct Branch {
  std::size_t from = 0;
  std::size_t to = 0;
  double r = 0.0;       // p.u.
  double l = 0.0;       // p.u., reactance = omega * l
  double c_half = 0.0;  // p.u. per end
  double s_max = 1.0;   // p.u.
  std::string level;    // level the impedances were referred to at ingestion
};

enum class Topology { Radial, Meshed };

/// Immutable per-unit network: buses, pi-model branches, and turbine / DRU
/// attachment points (the turbine-lv buses and the single dru-ac bus).
class NetworkModel {
 public:
  NetworkModel(PerUnitBase base, std::vector<Bus> buses, std::vector<Branch> branches);

  const PerUnitBase& base() const { return base_; }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  std::size_t n_buses() const { return buses_.size(); }
  std::size_t n_branches() const { return branches_.size(); }
  std::size_t n_wt() const { return n_wt_; }
  Topology topology() const { return topology_; }

  std::optional<std::size_t> find_bus(std::string_view id) const;
  std::size_t bus_index(std::string_view id) const;
  std::size_t dru_bus() const { return dru_bus_; }
  /// The pcc bus, or the dru-ac bus when the network has no separate pcc.
  std::size_t pcc_bus() const { return pcc_bus_; }
  /// Branches incident to each bus.
  const std::vector<std::vector<std::size_t>>& incidence() const { return incidence_; }
  /// True for a turbine step-up transformer (turbine-lv to turbine-hv).
  bool is_turbine_transformer(std::size_t branch) const;

 private:
  PerUnitBase base_;
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::vector<std::vector<std::size_t>> incidence_;
  std::size_t n_wt_ = 0;
  std::size_t dru_bus_ = 0;
  std::size_t pcc_bus_ = 0;
  Topology topology_ = Topology::Radial;
};

/// Parses the network part of a farm document (engineering units) into p.u.
/// Throws Error{Schema} / Error{Topology} on violations.
NetworkModel load_network(const nlohmann::json& document);
NetworkModel load_network_file(const std::string& path);

/// Inverse of load_network for the network part (engineering units).
nlohmann::json save_network(const NetworkModel& net);

struct BranchAdmittance {
  std::complex<double> series;  // 1 / (r + j omega l)
  double shunt_from = 0.0;      // susceptance omega * c_half
  double shunt_to = 0.0;
};

struct AdmittanceTable {
  double omega = 1.0;
  std::vector<BranchAdmittance> branches;
  std::vector<double> bus_shunt;  // total susceptance per bus, branch halves included
};

/// Series and shunt admittances at normalized frequency omega. The optional
/// extra_shunt_c adds per-bus capacitances (turbine filters) to bus_shunt.
AdmittanceTable build_admittance(const NetworkModel& net, double omega,
                                 const std::vector<double>& extra_shunt_c = {});

struct LumpedEquivalent {
  double l_net = 0.0;
  double c_net = 0.0;
};

/// Lumped collection-network inductance and capacitance.
///
/// l_net weights each branch inductance by the square of the share of total
/// farm current it carries when every turbine injects the same current, which
/// makes 1.5 * i_pcc^2 * omega * l_net equal to the summed series I^2 X for
/// uniform output. Turbine transformers are excluded (they have their own
/// term). c_net is the total shunt capacitance of branches and buses.
LumpedEquivalent aggregate_equivalents(const NetworkModel& net);

}  // namespace druopf
