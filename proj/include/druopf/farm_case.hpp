#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "druopf/devices.hpp"
#include "druopf/network.hpp"

namespace druopf {

/// Network plus the devices attached to it, as read from one farm document.
struct FarmCase {
  NetworkModel net;
  std::vector<TurbineUnit> turbines;
  DruStation dru;
  std::string description;

  std::size_t n_wt() const { return turbines.size(); }
  double p_farm_max() const;
  /// Filter capacitances per bus (zero where no turbine is attached).
  std::vector<double> filter_shunts() const;
  /// Lumped reactive model; requires a radial network.
  FarmModels models() const;
};

/// Loads `turbines` and `dru` on top of load_network. Engineering units:
/// c_f in uF, l_tf in mH (low-voltage side), n_tf as a kV ratio hv/lv,
/// p_max in MW, s_rating in MVA; dru l_c in mH (per bridge, valve side),
/// r_dc in ohm, v_dc_onshore and v_ac_bridge (valve-side line-line) in kV.
FarmCase load_farm_case(const nlohmann::json& document);
FarmCase load_farm_case_file(const std::string& path);

}  // namespace druopf
