#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "druopf/farm_case.hpp"

namespace druopf {

struct ProfileInterval {
  int hour = 0;
  std::vector<double> p_mw;  // in FarmCase turbine order
};

struct DayProfile {
  std::vector<ProfileInterval> intervals;  // ascending hour

  std::size_t horizon() const { return intervals.size(); }
  /// Per-turbine active power in p.u. of the farm base.
  std::vector<double> p_pu(std::size_t interval, const FarmCase& farm) const;
};

/// CSV with header `hour,turbine_id,p_mw`; turbine_id is the turbine's bus id.
/// Every hour must list every turbine exactly once with p_mw >= 0, else
/// Error{Schema}.
DayProfile load_profile_csv(std::istream& in, const FarmCase& farm);
DayProfile load_profile_file(const std::string& path, const FarmCase& farm);

}  // namespace druopf
