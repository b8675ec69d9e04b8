#pragma once

// Deterministic multi-site world: event execution, anti-entropy, fault
// oracle, convergence checking, metrics, and the exhaustive schedule oracle.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "treedoc/event.hpp"
#include "treedoc/site.hpp"

namespace treedoc {

struct Metrics {
  std::size_t live_sites = 0;
  std::size_t atoms = 0;
  std::size_t max_depth = 0;         // levels, over live sites
  double avg_depth = 0.0;            // mean over live sites
  double nil_ratio = 0.0;            // nil nodes / nodes, pooled over live sites
  double id_bytes_per_atom = 0.0;    // mean over live sites
  std::uint64_t lost_ops = 0;        // distinct edits lost (stale replay or unsent at crash)
  std::uint64_t ops_initiated = 0;
  std::uint64_t flatten_commits = 0;
  std::uint64_t flatten_aborts = 0;
  std::uint64_t gc_removed = 0;
  std::uint64_t sides_cleaned = 0;
};

struct CheckResult {
  bool ok = true;
  std::vector<std::string> failures;
  std::string witness;  // first differing (id, atom) between two replicas
};

class World {
 public:
  World() = default;
  explicit World(std::size_t sites) { add_sites(sites); }

  void add_sites(std::size_t n);
  std::size_t size() const noexcept { return sites_.size(); }
  Site& site(SiteId id);
  const Site& site(SiteId id) const;
  const std::vector<Site>& sites() const noexcept { return sites_; }

  /// Runs one event, then delivers whatever became ready. Assertion events
  /// return their outcome. Throws Error for refused events.
  std::optional<CheckResult> execute(const Event& e);

  void exchange(SiteId a, SiteId b);
  void sync();
  void quiesce();
  void poll();

  CheckResult check() const;
  Metrics metrics() const;

  std::vector<SiteId> live() const;       // not crashed
  std::vector<SiteId> connected() const;  // live and connected
  std::set<SiteId> required() const;      // not crashed and not suspected
  bool any_required_disconnected() const;
  bool quiescent() const noexcept { return quiescent_; }
  bool faults_seen() const noexcept { return faults_seen_; }
  std::uint64_t crash_lost() const noexcept { return crash_lost_; }

 private:
  Site& live_site(std::uint64_t id);
  void crash(SiteId s);
  std::uint64_t knowledge_signature() const;

  std::vector<Site> sites_;
  std::set<SiteId> recovered_;
  std::uint64_t crash_lost_ = 0;
  bool quiescent_ = false;
  bool faults_seen_ = false;  // crash or suspicion happened
  bool any_crash_ = false;
};

/// Edit operations with happens-before taken from their stamps.
struct Multilog {
  std::vector<Operation> ops;
};

/// Union of every edit operation held by live sites, in (site, seq) order.
Multilog collect_multilog(const World& w);

struct ScheduleReport {
  std::size_t schedules = 0;
  bool equivalent = true;
};

/// Replays every linear extension of happens-before on a fresh replica and
/// compares live (id, atom) sets. Throws BoundExceeded above `bound` ops.
ScheduleReport enumerate_and_check(const Multilog& m, std::size_t bound = 7);

}  // namespace treedoc
