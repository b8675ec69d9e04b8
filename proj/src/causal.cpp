#include "treedoc/causal.hpp"

namespace treedoc {

bool causally_ready(const Operation& op, const VectorClock& delivered) noexcept {
  if (delivered.get(op.site) + 1 != op.seq) return false;
  for (const auto& [site, value] : op.stamp.entries()) {
    if (site != op.site && delivered.get(site) < value) return false;
  }
  return true;
}

bool DeliveryBuffer::add(Operation op, const VectorClock& delivered) {
  if (delivered.get(op.site) >= op.seq) return false;
  return pending_.try_emplace(op.id(), std::move(op)).second;
}

std::optional<Operation> DeliveryBuffer::pop_ready(const VectorClock& delivered) {
  for (auto it = pending_.begin(); it != pending_.end(); ++it) {
    if (causally_ready(it->second, delivered)) {
      Operation op = std::move(it->second);
      pending_.erase(it);
      return op;
    }
  }
  return std::nullopt;
}

std::vector<Operation> DeliveryBuffer::try_deliver(VectorClock& clock) {
  std::vector<Operation> out;
  while (auto op = pop_ready(clock)) {
    clock.merge(op->stamp);
    out.push_back(std::move(*op));
  }
  return out;
}

bool stable_delete(const OpId& op, const MatrixClock& mc, std::span<const SiteId> required) {
  for (SiteId s : required) {
    if (mc.row(s).get(op.site) < op.seq) return false;
  }
  return true;
}

bool stable_insert(const OpId& op, const MatrixClock& mc, const VectorClock& local,
                   std::span<const SiteId> required) {
  for (SiteId s : required) {
    const auto& row = mc.row(s);
    if (row.get(op.site) < op.seq) return false;
    if (local.get(s) < row.get(s)) return false;
  }
  return true;
}

}  // namespace treedoc
