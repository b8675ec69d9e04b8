#pragma once

// Causal delivery and stability detection.

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "treedoc/clock.hpp"
#include "treedoc/operation.hpp"

namespace treedoc {

/// True when every operation `op` depends on has been delivered and `op` is
/// the next one from its site.
bool causally_ready(const Operation& op, const VectorClock& delivered) noexcept;

/// Operations received but not yet causally ready. Ready operations leave in
/// ascending (site, seq) order.
class DeliveryBuffer {
 public:
  /// Ignores operations already delivered or already pending.
  bool add(Operation op, const VectorClock& delivered);

  /// Removes and returns the smallest ready operation, if any.
  std::optional<Operation> pop_ready(const VectorClock& delivered);

  /// Delivers everything that becomes ready, merging each stamp into `clock`.
  std::vector<Operation> try_deliver(VectorClock& clock);

  bool contains(const OpId& id) const { return pending_.count(id) != 0; }
  bool empty() const noexcept { return pending_.empty(); }
  std::size_t size() const noexcept { return pending_.size(); }
  const std::map<OpId, Operation>& pending() const noexcept { return pending_; }

 private:
  std::map<OpId, Operation> pending_;
};

/// Every site in `required` has delivered `op` (acknowledgements compacted
/// into the matrix clock).
bool stable_delete(const OpId& op, const MatrixClock& mc, std::span<const SiteId> required);

/// Every site in `required` has delivered `op`, and the local replica has
/// delivered everything each of them had issued by then, so no insert
/// concurrent with `op` can still arrive.
bool stable_insert(const OpId& op, const MatrixClock& mc, const VectorClock& local,
                   std::span<const SiteId> required);

}  // namespace treedoc
