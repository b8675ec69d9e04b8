#pragma once

// Seeded random event generation over a World.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treedoc/event.hpp"
#include "treedoc/sim.hpp"

namespace treedoc {

struct FaultProfile {
  bool partition = false;  // disconnect / reconnect
  bool crash = false;      // crash / recover
  bool suspect = false;    // false crash suspicion

  /// "none", or '+'-joined names from {partition, crash, suspect}; "all"
  /// enables everything. Throws ParseError.
  static FaultProfile parse(std::string_view text);
  std::string name() const;
};

struct FuzzOptions {
  std::uint64_t seed = 1;
  std::size_t sites = 3;
  std::size_t ops = 200;  // edit operations to initiate
  FaultProfile faults;
  bool flatten = true;
  bool transactions = true;
};

using EventObserver = std::function<void(const Event&, const std::optional<CheckResult>&)>;

/// Drives `world` (which must be empty) with a random legal schedule of
/// `ops` edits, then quiesces and checks. Returns the executed events;
/// refused candidates are skipped and not recorded.
std::vector<Event> fuzz(World& world, const FuzzOptions& opt, const EventObserver& observe = {});

}  // namespace treedoc
