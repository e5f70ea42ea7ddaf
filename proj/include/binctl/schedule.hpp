// Fault and load events applied to a running plant session. `at` is an
// iteration index for the static controller and a time in seconds for the
// dynamic controller.
#pragma once

#include <cstddef>
#include <set>
#include <vector>

#include "binctl/plant.hpp"

namespace binctl {

enum class FaultMode { stuck_on, stuck_off, repaired };

struct FaultEvent {
  double at = 0.0;
  std::size_t actuator = 0;
  FaultMode mode = FaultMode::stuck_on;
  bool detected = false;  ///< detected faults are also excluded from planning
};

struct LoadEvent {
  double at = 0.0;
  Vector force;
};

struct Schedule {
  std::vector<FaultEvent> faults;
  std::vector<LoadEvent> loads;

  /// Time-ordered, indices in range, load vectors of length n.
  void validate(std::size_t m, Eigen::Index n) const;
  bool empty() const { return faults.empty() && loads.empty(); }
};

/// Walks a schedule forward, applying each event exactly once.
class ScheduleCursor {
 public:
  explicit ScheduleCursor(const Schedule& schedule) : schedule_(&schedule) {}

  /// Applies every pending event with at <= now. Returns true if anything changed.
  bool advance(double now, FaultState& faults, LoadState& load, std::set<std::size_t>& excluded);

 private:
  const Schedule* schedule_;
  std::size_t next_fault_ = 0;
  std::size_t next_load_ = 0;
};

}  // namespace binctl
