#include "binctl/schedule.hpp"

#include <string>

namespace binctl {

void Schedule::validate(std::size_t m, Eigen::Index n) const {
  for (std::size_t i = 0; i < faults.size(); ++i) {
    if (faults[i].actuator >= m)
      throw ConfigError("schedule: fault event " + std::to_string(i) + " references actuator " +
                        std::to_string(faults[i].actuator) + " >= m");
    if (i > 0 && faults[i].at < faults[i - 1].at) throw ConfigError("schedule: fault events must be time-ordered");
  }
  for (std::size_t i = 0; i < loads.size(); ++i) {
    if (loads[i].force.size() != n || !loads[i].force.allFinite())
      throw ConfigError("schedule: load event " + std::to_string(i) + " needs n finite force values");
    if (i > 0 && loads[i].at < loads[i - 1].at) throw ConfigError("schedule: load events must be time-ordered");
  }
}

bool ScheduleCursor::advance(double now, FaultState& faults, LoadState& load, std::set<std::size_t>& excluded) {
  bool changed = false;
  while (next_fault_ < schedule_->faults.size() && schedule_->faults[next_fault_].at <= now) {
    const auto& e = schedule_->faults[next_fault_++];
    faults.stuck_on.erase(e.actuator);
    faults.stuck_off.erase(e.actuator);
    excluded.erase(e.actuator);
    if (e.mode == FaultMode::stuck_on) faults.stuck_on.insert(e.actuator);
    if (e.mode == FaultMode::stuck_off) faults.stuck_off.insert(e.actuator);
    if (e.detected && e.mode != FaultMode::repaired) excluded.insert(e.actuator);
    changed = true;
  }
  while (next_load_ < schedule_->loads.size() && schedule_->loads[next_load_].at <= now) {
    load.f_ext = schedule_->loads[next_load_++].force;
    changed = true;
  }
  return changed;
}

}  // namespace binctl
