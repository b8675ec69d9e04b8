#pragma once

// The treedoc replica: a binary tree whose positions ("slots") hold a bare
// main node and any number of side nodes, plus flat atom runs that stand for
// canonically shaped subtrees until a path reaches into them.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "treedoc/atom.hpp"
#include "treedoc/ids.hpp"
#include "treedoc/operation.hpp"

namespace treedoc {

/// A contiguous run of atoms standing for the canonical complete tree of
/// `height` levels populated in infix order. Sub-runs share the buffer.
struct FlatRun {
  std::shared_ptr<const std::vector<Atom>> atoms;
  std::size_t offset = 0;
  std::size_t length = 0;
  int height = 0;
  std::uint64_t epoch = 0;
};

/// ceil(log2(n + 1)).
int canonical_height(std::size_t n) noexcept;

struct Node;

struct Slot {
  std::unique_ptr<Node> main;                             // bare, or a promoted side (main->tag)
  std::map<Disambiguator, std::unique_ptr<Node>> sides;  // ordered by disambiguator
  std::optional<FlatRun> flat;                            // exclusive with main/sides

  bool empty() const noexcept { return !main && sides.empty() && !flat; }
};

struct Node {
  SlotKey tag;                    // disambiguator kept after promotion by clean_side
  std::optional<Atom> atom;       // nil when absent
  bool deleted = false;           // held an atom that was deleted
  std::optional<OpId> deleted_by;
  std::unique_ptr<Slot> child[2];

  bool is_leaf() const noexcept {
    return (!child[0] || child[0]->empty()) && (!child[1] || child[1]->empty());
  }
};

struct LiveAtom {
  PosId id;
  Atom atom;

  friend bool operator==(const LiveAtom&, const LiveAtom&) = default;
};

struct ResolvedNode {
  PosId id;                  // identity of the entry actually reached
  std::optional<Atom> atom;
  bool materialized = true;  // false when it lies inside an unexpanded flat run
};

struct GcCandidate {
  PosId id;
  std::optional<OpId> deleted_by;  // nullopt for structural nil nodes
};

struct FlattenMark {
  OpId proposal;
  std::uint64_t epoch = 0;
};

struct TreeStats {
  std::size_t live_atoms = 0;
  std::size_t nodes = 0;          // materialized entries plus atoms held in flat runs
  std::size_t nil_nodes = 0;
  std::size_t flat_atoms = 0;
  std::size_t max_depth = 0;      // levels: components + 1
  double avg_depth = 0.0;
  double id_bytes_per_atom = 0.0; // mean canonical encoding length
};

class Treedoc {
 public:
  Treedoc() = default;
  Treedoc(const Treedoc& other);
  Treedoc& operator=(const Treedoc& other);
  Treedoc(Treedoc&&) noexcept = default;
  Treedoc& operator=(Treedoc&&) noexcept = default;

  /// Document whose root slot is a single flat run of `atoms`.
  static Treedoc from_flat(const std::vector<Atom>& atoms);

  // --- reading --------------------------------------------------------------

  /// Infix walk, skipping nil nodes but not their descendants.
  std::vector<Atom> contents() const;
  std::string render() const { return join(contents()); }
  std::size_t size() const;
  std::vector<LiveAtom> live_atoms() const;

  /// Follows the path; a key absent from a slot falls back to the slot's main
  /// node.
  std::optional<ResolvedNode> resolve(const PosId& pos) const;

  /// Entry whose key matches every component exactly (a promoted node
  /// matches its old key).
  bool has_entry(const PosId& pos) const;

  PosId uid_at(std::size_t index) const;

  /// (BEGIN or previous atom, END or following atom) for inserting so the new
  /// atom lands at visible `index`.
  std::pair<std::optional<PosId>, std::optional<PosId>> neighbors_for_insert(std::size_t index) const;

  /// Fresh identifier strictly between `prev` (nullopt = BEGIN) and `next`
  /// (nullopt = END), ending in key `d`.
  PosId new_uid(const std::optional<PosId>& prev, const std::optional<PosId>& next, Disambiguator d) const;

  // --- editing --------------------------------------------------------------

  void insert_atom(const Atom& atom, const PosId& pos, bool initiator);
  void delete_atom(const PosId& pos, bool initiator, std::optional<OpId> by = std::nullopt);

  /// Removes a nil leaf. Stability is the caller's responsibility.
  void gc(const PosId& pos);

  /// Promotes a lone side node to the slot's main node. Returns false when the
  /// slot holds other entries. Stability is the caller's responsibility.
  bool clean_side(const PosId& pos);

  std::vector<GcCandidate> nil_leaves() const;
  std::vector<PosId> lone_sides() const;

  /// Materialized nil nodes with no atom anywhere below them.
  std::size_t dead_nodes() const;

  // --- structure ------------------------------------------------------------

  /// Atoms of the subtree in slot `slot` (last component bare); nullopt when
  /// the slot does not exist.
  std::optional<std::vector<Atom>> slot_contents(const PosId& slot) const;

  /// Replaces the slot's subtree by a flat run and records the flatten.
  void commit_flatten(const PosId& slot, const std::vector<Atom>& atoms, const OpId& proposal);

  /// Expands flat runs along `pos` only; throws UnresolvedPath if `pos` does
  /// not name an existing node afterwards.
  ResolvedNode resolve_into_flat(const PosId& pos);

  /// Expands every flat run.
  void expand_all();

  /// Innermost committed flatten whose slot contains `pos`.
  std::optional<FlattenTag> flatten_tag(const PosId& pos) const;
  const std::map<std::string, std::pair<PosId, FlattenMark>>& flatten_marks() const noexcept { return marks_; }

  TreeStats stats() const;
  std::size_t materialized_nodes() const;

  const Slot& root_slot() const noexcept { return root_; }

 private:
  Node& materialize(const PosId& pos);
  Slot* find_slot(const PosId& slot_id);
  Slot& materialize_slot(const PosId& slot_id);

  Slot root_;
  std::map<std::string, std::pair<PosId, FlattenMark>> marks_;  // keyed by encoded slot id
};

/// `pos` lies in the subtree of slot `slot` (whose last component is bare).
bool in_slot(const PosId& pos, const PosId& slot) noexcept;

/// A slot identifier: root or a path whose final component is bare.
bool is_slot_id(const PosId& id) noexcept;

}  // namespace treedoc
