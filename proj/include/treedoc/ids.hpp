#pragma once

// Position identifiers: paths in the binary tree, optionally disambiguated
// at each step, and the total order over them.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace treedoc {

using SiteId = std::uint32_t;

/// (counter, site) pair naming one side node. The counter is the initiating
/// operation's per-site sequence number, so a disambiguator also identifies
/// the insert that created it.
struct Disambiguator {
  std::uint64_t counter = 0;
  SiteId site = 0;

  friend auto operator<=>(const Disambiguator&, const Disambiguator&) = default;
};

/// Selects an entry inside a tree slot: nullopt is the bare (main) node.
using SlotKey = std::optional<Disambiguator>;

struct PathComponent {
  std::uint8_t dir = 0;  // 0 = left child, 1 = right child
  SlotKey disamb;

  friend bool operator==(const PathComponent&, const PathComponent&) = default;
};

struct PosId {
  SlotKey root;                          // side-node key of the root slot
  std::vector<PathComponent> components;

  bool is_root() const noexcept { return components.empty(); }
  std::size_t size() const noexcept { return components.size(); }

  /// Key selecting the final entry (the root key for a root identifier).
  const SlotKey& last_key() const noexcept {
    return components.empty() ? root : components.back().disamb;
  }

  PosId child(std::uint8_t dir, SlotKey key) const {
    PosId out = *this;
    out.components.push_back({dir, key});
    return out;
  }

  friend bool operator==(const PosId&, const PosId&) = default;
};

/// Total order over identifiers: infix order of the tree in which every slot
/// lists its bare node first, then side nodes by disambiguator.
std::strong_ordering compare(const PosId& a, const PosId& b) noexcept;

inline bool operator<(const PosId& a, const PosId& b) noexcept { return compare(a, b) < 0; }

/// Strict ancestry: every component of `u` matches `v` exactly (direction and
/// key) and `v` is longer.
bool is_ancestor(const PosId& u, const PosId& v) noexcept;

/// Drops the last component; the root has no parent.
std::optional<PosId> parent(const PosId& v);

/// Identifier with disambiguators stripped, e.g. "100" for [(1)(0)(0,d)].
std::string dir_bits(const PosId& id);

/// Canonical text form: "[" components "]", each component "0" or "1", with a
/// key written as "(counter,site)" after the bit. A root key is written as a
/// leading "-(counter,site)".
std::string encode(const PosId& id);
std::string encode(const Disambiguator& d);

/// Inverse of encode(); throws Error{ParseError}.
PosId parse_pos_id(std::string_view text);

/// Reads a PosId starting at `text[pos]`, advancing `pos`.
PosId parse_pos_id(std::string_view text, std::size_t& pos);

}  // namespace treedoc
