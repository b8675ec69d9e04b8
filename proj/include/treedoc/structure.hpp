#pragma once

// Conversions between flat atom strings and canonical trees, and the pure
// parts of the flatten commitment protocol.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "treedoc/operation.hpp"
#include "treedoc/tree.hpp"

namespace treedoc {

struct AtomString {
  std::vector<Atom> atoms;
  std::uint64_t epoch = 0;  // committed flattens of this slot so far

  friend bool operator==(const AtomString&, const AtomString&) = default;
};

/// Canonical tree of depth ceil(log2(n+1)), fully materialized. Positions
/// past the last atom are absent unless they are ancestors of atoms, in which
/// case they are nil nodes.
Treedoc explode(const AtomString& s);

/// Atoms of the subtree in `slot`, in order. Throws UnresolvedPath when the
/// slot does not exist.
AtomString flatten_local(const Treedoc& doc, const PosId& slot);

/// Proposal view of a FLATTEN_PROPOSE operation.
struct FlattenProposal {
  OpId id;
  PosId slot;
  VectorClock stamp;
  std::vector<Atom> content;

  static FlattenProposal from(const Operation& op);
};

struct Vote {
  SiteId site = 0;
  OpId proposal;
  bool yes = false;
};

struct Decision {
  OpId proposal;
  bool committed = false;
};

enum class Outcome { Pending, Commit, Abort };

/// Two-phase commit rule at the coordinator. `required` lists the sites whose
/// vote counts (crashed ones excluded); the proposer's own Yes is implied by
/// its proposal. Any No, or any required site being unreachable, aborts.
Outcome decide(const FlattenProposal& p, const std::map<SiteId, bool>& votes, const std::set<SiteId>& required,
               bool any_required_disconnected);

/// Slots overlap when one contains the other.
bool slots_overlap(const PosId& a, const PosId& b) noexcept;

/// An executed edit makes a site vote No when it is concurrent with the
/// proposal and targets the proposal's subtree.
bool edit_conflicts(const FlattenProposal& p, const Operation& edit) noexcept;

}  // namespace treedoc
