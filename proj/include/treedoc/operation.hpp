#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treedoc/atom.hpp"
#include "treedoc/clock.hpp"
#include "treedoc/ids.hpp"

namespace treedoc {

enum class OpKind : std::uint8_t {
  Insert,
  Delete,
  NoOp,
  TxnStart,
  TxnEnd,
  FlattenPropose,
  FlattenVote,
  FlattenDecide,
};

const char* to_string(OpKind kind) noexcept;

struct OpId {
  SiteId site = 0;
  std::uint64_t seq = 0;

  friend auto operator<=>(const OpId&, const OpId&) = default;
};

std::string encode(const OpId& id);  // "site.seq"

/// The committed flatten an edit's target lies under, as seen by the
/// initiator. A replica whose innermost flatten for that path differs cannot
/// interpret the path and drops the edit.
struct FlattenTag {
  PosId slot;
  OpId proposal;

  friend bool operator==(const FlattenTag&, const FlattenTag&) = default;
};

struct Operation {
  SiteId site = 0;
  std::uint64_t seq = 0;
  VectorClock stamp;  // includes {site: seq}
  OpKind kind = OpKind::NoOp;

  PosId pos;                      // edit target, or the flattened slot
  Atom atom;                      // Insert payload
  std::optional<FlattenTag> tag;  // Insert / Delete
  std::vector<Atom> content;      // FlattenPropose
  bool yes = false;               // FlattenVote: yes; FlattenDecide: commit
  OpId ref;                       // FlattenVote / FlattenDecide: the proposal

  OpId id() const noexcept { return {site, seq}; }
  bool is_edit() const noexcept { return kind == OpKind::Insert || kind == OpKind::Delete; }
};

bool happens_before(const Operation& a, const Operation& b) noexcept;
bool concurrent(const Operation& a, const Operation& b) noexcept;

/// One line: `site seq vclock kind pos [atom] [extras]`.
std::string encode(const Operation& op);
Operation parse_operation(std::string_view line);

}  // namespace treedoc
