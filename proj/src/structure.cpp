#include "treedoc/structure.hpp"

#include "treedoc/error.hpp"

namespace treedoc {

Treedoc explode(const AtomString& s) {
  Treedoc doc = Treedoc::from_flat(s.atoms);
  doc.expand_all();
  return doc;
}

AtomString flatten_local(const Treedoc& doc, const PosId& slot) {
  auto atoms = doc.slot_contents(slot);
  if (!atoms) throw Error(Errc::UnresolvedPath, "slot " + encode(slot) + " does not exist");
  AtomString out{std::move(*atoms), 0};
  if (auto it = doc.flatten_marks().find(encode(slot)); it != doc.flatten_marks().end()) {
    out.epoch = it->second.second.epoch;
  }
  return out;
}

FlattenProposal FlattenProposal::from(const Operation& op) {
  if (op.kind != OpKind::FlattenPropose) throw Error(Errc::PreconditionViolated, "not a flatten proposal");
  return {op.id(), op.pos, op.stamp, op.content};
}

Outcome decide(const FlattenProposal& p, const std::map<SiteId, bool>& votes, const std::set<SiteId>& required,
               bool any_required_disconnected) {
  for (const auto& [site, yes] : votes) {
    if (!yes && required.count(site)) return Outcome::Abort;
  }
  if (any_required_disconnected) return Outcome::Abort;
  for (SiteId s : required) {
    if (s == p.id.site) continue;
    if (!votes.count(s)) return Outcome::Pending;
  }
  return Outcome::Commit;
}

bool slots_overlap(const PosId& a, const PosId& b) noexcept { return in_slot(a, b) || in_slot(b, a); }

bool edit_conflicts(const FlattenProposal& p, const Operation& edit) noexcept {
  if (!edit.is_edit() || !in_slot(edit.pos, p.slot)) return false;
  const bool edit_before = p.stamp.get(edit.site) >= edit.seq;
  const bool edit_after = edit.stamp.get(p.id.site) >= p.id.seq;
  return !edit_before && !edit_after;
}

}  // namespace treedoc
