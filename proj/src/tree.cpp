#include "treedoc/tree.hpp"

#include <algorithm>
#include <limits>

#include "treedoc/error.hpp"

namespace treedoc {

int canonical_height(std::size_t n) noexcept {
  int h = 0;
  while (h < 64 && ((std::size_t{1} << h) - 1) < n) ++h;
  return h;
}

namespace {

std::size_t capacity(int height) noexcept {
  if (height <= 0) return 0;
  if (height >= 64) return std::numeric_limits<std::size_t>::max();
  return (std::size_t{1} << height) - 1;
}

// Read-only reference into a flat run; no ownership.
struct RunRef {
  const std::vector<Atom>* atoms = nullptr;
  std::size_t offset = 0;
  std::size_t length = 0;
  int height = 0;

  static RunRef of(const FlatRun& r) { return {r.atoms.get(), r.offset, r.length, r.height}; }

  // Canonical root of this run: `left` atoms go left, then the root atom if
  // any remain, then the rest go right.
  std::size_t left_count() const noexcept { return std::min(length, capacity(height - 1)); }
  bool has_atom() const noexcept { return length > left_count(); }
  RunRef left() const noexcept { return {atoms, offset, left_count(), height - 1}; }
  RunRef right() const noexcept {
    const auto l = left_count();
    return {atoms, offset + l + 1, has_atom() ? length - l - 1 : 0, height - 1};
  }
};

class SlotView;

class NodeView {
 public:
  static NodeView real(const Node& n) {
    NodeView v;
    v.node_ = &n;
    return v;
  }
  static NodeView virt(const RunRef& r) {
    NodeView v;
    v.run_ = r;
    return v;
  }

  const Atom* atom() const noexcept {
    if (node_) return node_->atom ? &*node_->atom : nullptr;
    return run_.has_atom() ? &(*run_.atoms)[run_.offset + run_.left_count()] : nullptr;
  }
  bool materialized() const noexcept { return node_ != nullptr; }
  const Node* node() const noexcept { return node_; }
  SlotView child(int dir) const;

  // Structural nil leaves carry no position worth keeping.
  bool ignorable() const noexcept {
    return node_ && !node_->tag && !node_->atom && !node_->deleted && node_->is_leaf();
  }

 private:
  const Node* node_ = nullptr;
  RunRef run_;
};

class SlotView {
 public:
  SlotView() = default;
  explicit SlotView(const Slot* s) {
    if (s && s->flat) {
      run_ = RunRef::of(*s->flat);
      is_run_ = true;
    } else {
      slot_ = s;
    }
  }
  explicit SlotView(const RunRef& r) : run_(r), is_run_(true) {}

  const RunRef* run() const noexcept { return is_run_ ? &run_ : nullptr; }
  const Slot* slot() const noexcept { return slot_; }

  // f(key, node) returns true to stop; returns whether it stopped.
  template <class F>
  bool for_each(F&& f) const {
    if (is_run_) return run_.length > 0 && f(SlotKey{}, NodeView::virt(run_));
    if (!slot_) return false;
    const Node* m = slot_->main.get();
    bool main_done = m == nullptr;
    if (m && !m->tag) {
      if (f(SlotKey{}, NodeView::real(*m))) return true;
      main_done = true;
    }
    for (const auto& [d, n] : slot_->sides) {
      if (!main_done && *m->tag < d) {
        if (f(m->tag, NodeView::real(*m))) return true;
        main_done = true;
      }
      if (f(SlotKey{d}, NodeView::real(*n))) return true;
    }
    if (!main_done) return f(m->tag, NodeView::real(*m));
    return false;
  }

  std::optional<NodeView> select_exact(const SlotKey& key) const {
    if (is_run_) {
      if (!key && run_.length > 0) return NodeView::virt(run_);
      return std::nullopt;
    }
    if (!slot_) return std::nullopt;
    if (!key) {
      if (slot_->main && !slot_->main->tag) return NodeView::real(*slot_->main);
      return std::nullopt;
    }
    if (auto it = slot_->sides.find(*key); it != slot_->sides.end()) return NodeView::real(*it->second);
    if (slot_->main && slot_->main->tag == key) return NodeView::real(*slot_->main);
    return std::nullopt;
  }

  // side(N, key) if it exists, else N.
  std::optional<std::pair<SlotKey, NodeView>> select_fallback(const SlotKey& key) const {
    if (is_run_) {
      if (run_.length > 0) return std::pair{SlotKey{}, NodeView::virt(run_)};
      return std::nullopt;
    }
    if (!slot_) return std::nullopt;
    if (key) {
      if (auto it = slot_->sides.find(*key); it != slot_->sides.end()) {
        return std::pair{key, NodeView::real(*it->second)};
      }
    }
    if (slot_->main) return std::pair{slot_->main->tag, NodeView::real(*slot_->main)};
    return std::nullopt;
  }

 private:
  const Slot* slot_ = nullptr;
  RunRef run_;
  bool is_run_ = false;
};

SlotView NodeView::child(int dir) const {
  if (node_) return SlotView(node_->child[dir].get());
  const RunRef sub = dir == 0 ? run_.left() : run_.right();
  return sub.length ? SlotView(sub) : SlotView();
}

void enter(PosId& path, bool is_root, std::uint8_t dir, const SlotKey& key) {
  if (is_root) {
    path.root = key;
  } else {
    path.components.push_back({dir, key});
  }
}

void leave(PosId& path, bool is_root) {
  if (is_root) {
    path.root.reset();
  } else {
    path.components.pop_back();
  }
}

// In-order visit of every entry; visit(id, node) returns true to stop. When
// stopped, `path` still holds the identifier of the entry that stopped it.
template <class F>
bool walk(const SlotView& s, PosId& path, bool is_root, std::uint8_t dir, F& visit) {
  return s.for_each([&](const SlotKey& key, const NodeView& n) {
    enter(path, is_root, dir, key);
    if (walk(n.child(0), path, false, 0, visit) || visit(path, n) || walk(n.child(1), path, false, 1, visit)) {
      return true;
    }
    leave(path, is_root);
    return false;
  });
}

void collect(const SlotView& s, std::vector<Atom>& out) {
  if (const auto* r = s.run()) {
    out.insert(out.end(), r->atoms->begin() + static_cast<std::ptrdiff_t>(r->offset),
               r->atoms->begin() + static_cast<std::ptrdiff_t>(r->offset + r->length));
    return;
  }
  s.for_each([&](const SlotKey&, const NodeView& n) {
    collect(n.child(0), out);
    if (const Atom* a = n.atom()) out.push_back(*a);
    collect(n.child(1), out);
    return false;
  });
}

std::size_t count_live(const SlotView& s) {
  if (const auto* r = s.run()) return r->length;
  std::size_t total = 0;
  s.for_each([&](const SlotKey&, const NodeView& n) {
    total += count_live(n.child(0)) + (n.atom() ? 1 : 0) + count_live(n.child(1));
    return false;
  });
  return total;
}

// Finds the k-th live atom, skipping whole flat runs by length.
bool find_kth(const SlotView& s, PosId& path, bool is_root, std::uint8_t dir, std::size_t& k) {
  if (const auto* r = s.run(); r && r->length <= k) {
    k -= r->length;
    return false;
  }
  return s.for_each([&](const SlotKey& key, const NodeView& n) {
    enter(path, is_root, dir, key);
    if (find_kth(n.child(0), path, false, 0, k)) return true;
    if (n.atom()) {
      if (k == 0) return true;
      --k;
    }
    if (find_kth(n.child(1), path, false, 1, k)) return true;
    leave(path, is_root);
    return false;
  });
}

// Smallest non-ignorable entry strictly after `after` (everything when
// `after` is BEGIN).
bool first_after(const SlotView& s, PosId& path, bool is_root, std::uint8_t dir, const std::optional<PosId>& after);

bool first_after_in_node(const NodeView& n, PosId& path, const std::optional<PosId>& after) {
  if (!after || compare(*after, path) < 0) {
    if (first_after(n.child(0), path, false, 0, after)) return true;
    if (!n.ignorable()) return true;
  }
  return first_after(n.child(1), path, false, 1, after);
}

bool first_after(const SlotView& s, PosId& path, bool is_root, std::uint8_t dir, const std::optional<PosId>& after) {
  return s.for_each([&](const SlotKey& key, const NodeView& n) {
    enter(path, is_root, dir, key);
    if (first_after_in_node(n, path, after)) return true;
    leave(path, is_root);
    return false;
  });
}

std::optional<NodeView> view_exact(const Slot& root, const PosId& pos) {
  SlotView s(&root);
  auto n = s.select_exact(pos.root);
  for (const auto& c : pos.components) {
    if (!n) return std::nullopt;
    n = n->child(c.dir).select_exact(c.disamb);
  }
  return n;
}

std::unique_ptr<Slot> clone_slot(const Slot& s);

std::unique_ptr<Node> clone_node(const Node& n) {
  auto out = std::make_unique<Node>();
  out->tag = n.tag;
  out->atom = n.atom;
  out->deleted = n.deleted;
  out->deleted_by = n.deleted_by;
  for (int d = 0; d < 2; ++d) {
    if (n.child[d]) out->child[d] = clone_slot(*n.child[d]);
  }
  return out;
}

std::unique_ptr<Slot> clone_slot(const Slot& s) {
  auto out = std::make_unique<Slot>();
  if (s.main) out->main = clone_node(*s.main);
  for (const auto& [d, n] : s.sides) out->sides.emplace(d, clone_node(*n));
  out->flat = s.flat;
  return out;
}

// Replaces a flat run by its canonical root node with flat children.
void expand(Slot& s) {
  const FlatRun run = *s.flat;
  s.flat.reset();
  if (run.length == 0) return;
  const RunRef ref = RunRef::of(run);
  auto node = std::make_unique<Node>();
  if (ref.has_atom()) node->atom = (*run.atoms)[run.offset + ref.left_count()];
  const RunRef parts[2] = {ref.left(), ref.right()};
  for (int d = 0; d < 2; ++d) {
    if (parts[d].length == 0) continue;
    node->child[d] = std::make_unique<Slot>();
    node->child[d]->flat = FlatRun{run.atoms, parts[d].offset, parts[d].length, parts[d].height, run.epoch};
  }
  s.main = std::move(node);
}

Node& select_create(Slot& s, const SlotKey& key) {
  if (s.flat) expand(s);
  if (!key) {
    if (s.main && s.main->tag) {
      // A bare path now needs the main position; move the promoted node back.
      const Disambiguator t = *s.main->tag;
      s.main->tag.reset();
      s.sides[t] = std::move(s.main);
    }
    if (!s.main) s.main = std::make_unique<Node>();
    return *s.main;
  }
  if (auto it = s.sides.find(*key); it != s.sides.end()) return *it->second;
  if (s.main && s.main->tag == key) return *s.main;
  auto& slot = s.sides[*key];
  slot = std::make_unique<Node>();
  return *slot;
}

void expand_all_in(Slot& s) {
  if (s.flat) expand(s);
  auto visit = [](Node& n) {
    for (auto& c : n.child) {
      if (c) expand_all_in(*c);
    }
  };
  if (s.main) visit(*s.main);
  for (auto& [d, n] : s.sides) visit(*n);
}

bool structural_nil_leaf(const Node& n) { return !n.tag && !n.atom && !n.deleted && n.is_leaf(); }

}  // namespace

bool is_slot_id(const PosId& id) noexcept {
  if (id.components.empty()) return !id.root;
  return !id.components.back().disamb;
}

bool in_slot(const PosId& pos, const PosId& slot) noexcept {
  if (slot.components.empty()) return true;
  if (pos.root != slot.root) return false;
  const auto n = slot.size();
  if (pos.size() < n) return false;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(pos.components[i] == slot.components[i])) return false;
  }
  return pos.components[n - 1].dir == slot.components[n - 1].dir;
}

Treedoc::Treedoc(const Treedoc& other) : marks_(other.marks_) {
  auto copy = clone_slot(other.root_);
  root_ = std::move(*copy);
}

Treedoc& Treedoc::operator=(const Treedoc& other) {
  if (this != &other) {
    Treedoc tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

Treedoc Treedoc::from_flat(const std::vector<Atom>& atoms) {
  Treedoc doc;
  if (!atoms.empty()) {
    doc.root_.flat =
        FlatRun{std::make_shared<const std::vector<Atom>>(atoms), 0, atoms.size(), canonical_height(atoms.size()), 0};
  }
  return doc;
}

std::vector<Atom> Treedoc::contents() const {
  std::vector<Atom> out;
  collect(SlotView(&root_), out);
  return out;
}

std::size_t Treedoc::size() const { return count_live(SlotView(&root_)); }

std::vector<LiveAtom> Treedoc::live_atoms() const {
  std::vector<LiveAtom> out;
  PosId path;
  auto visit = [&](const PosId& id, const NodeView& n) {
    if (const Atom* a = n.atom()) out.push_back({id, *a});
    return false;
  };
  walk(SlotView(&root_), path, true, 0, visit);
  return out;
}

std::optional<ResolvedNode> Treedoc::resolve(const PosId& pos) const {
  SlotView s(&root_);
  auto hit = s.select_fallback(pos.root);
  if (!hit) return std::nullopt;
  ResolvedNode out;
  out.id.root = hit->first;
  NodeView n = hit->second;
  for (const auto& c : pos.components) {
    hit = n.child(c.dir).select_fallback(c.disamb);
    if (!hit) return std::nullopt;
    out.id.components.push_back({c.dir, hit->first});
    n = hit->second;
  }
  if (const Atom* a = n.atom()) out.atom = *a;
  out.materialized = n.materialized();
  return out;
}

bool Treedoc::has_entry(const PosId& pos) const { return view_exact(root_, pos).has_value(); }

PosId Treedoc::uid_at(std::size_t index) const {
  PosId path;
  std::size_t k = index;
  if (!find_kth(SlotView(&root_), path, true, 0, k)) {
    throw Error(Errc::IndexOutOfRange, "no atom at index " + std::to_string(index));
  }
  return path;
}

std::pair<std::optional<PosId>, std::optional<PosId>> Treedoc::neighbors_for_insert(std::size_t index) const {
  const auto n = size();
  if (index > n) {
    throw Error(Errc::IndexOutOfRange, "insert index " + std::to_string(index) + " > length " + std::to_string(n));
  }
  std::optional<PosId> prev, next;
  if (index > 0) prev = uid_at(index - 1);
  if (index < n) next = uid_at(index);
  return {prev, next};
}

PosId Treedoc::new_uid(const std::optional<PosId>& prev, const std::optional<PosId>& next, Disambiguator d) const {
  if (prev && next && compare(*prev, *next) >= 0) {
    throw Error(Errc::PreconditionViolated, "new_uid needs prev < next, got " + encode(*prev) + " and " + encode(*next));
  }
  if (prev && !has_entry(*prev)) throw Error(Errc::PreconditionViolated, "prev " + encode(*prev) + " not in document");
  if (next && !has_entry(*next)) throw Error(Errc::PreconditionViolated, "next " + encode(*next) + " not in document");

  // Recursing on any node between prev and next ends at prev's immediate
  // successor, so only that node matters.
  std::optional<PosId> follow;
  PosId path;
  if (first_after(SlotView(&root_), path, true, 0, prev)) follow = path;
  if (next && (!follow || compare(*next, *follow) < 0)) follow = next;

  if (!prev && !follow) {
    PosId root;
    root.root = d;
    return root;
  }
  if (!prev) return follow->child(0, d);
  if (!follow) return prev->child(1, d);
  if (is_ancestor(*prev, *follow)) return follow->child(0, d);
  return prev->child(1, d);
}

Node& Treedoc::materialize(const PosId& pos) {
  Node* n = &select_create(root_, pos.root);
  for (const auto& c : pos.components) {
    auto& child = n->child[c.dir];
    if (!child) child = std::make_unique<Slot>();
    n = &select_create(*child, c.disamb);
  }
  return *n;
}

void Treedoc::insert_atom(const Atom& atom, const PosId& pos, bool initiator) {
  if (atom.empty()) throw Error(Errc::PreconditionViolated, "atom must not be nil");
  if (initiator) {
    if (auto p = parent(pos); p && !has_entry(*p)) {
      throw Error(Errc::InitiatorPreconditionViolated, "parent of " + encode(pos) + " does not exist");
    }
    if (has_entry(pos)) throw Error(Errc::InitiatorPreconditionViolated, encode(pos) + " already exists");
  }
  Node& n = materialize(pos);
  if (n.atom) throw Error(Errc::PreconditionViolated, encode(pos) + " already holds an atom");
  n.atom = atom;
  n.deleted = false;
  n.deleted_by.reset();
}

void Treedoc::delete_atom(const PosId& pos, bool initiator, std::optional<OpId> by) {
  if (initiator) {
    auto v = view_exact(root_, pos);
    if (!v || !v->atom()) throw Error(Errc::InitiatorPreconditionViolated, "no atom at " + encode(pos));
  }
  Node& n = materialize(pos);
  n.atom.reset();
  if (!n.deleted) {
    n.deleted = true;
    n.deleted_by = by;
  }
}

Slot* Treedoc::find_slot(const PosId& slot_id) {
  if (slot_id.components.empty()) return &root_;
  PosId parent_id = slot_id;
  const auto dir = parent_id.components.back().dir;
  parent_id.components.pop_back();
  // Walk real nodes only.
  Slot* s = &root_;
  auto select = [](Slot* slot, const SlotKey& key) -> Node* {
    if (!slot || slot->flat) return nullptr;
    if (!key) return slot->main && !slot->main->tag ? slot->main.get() : nullptr;
    if (auto it = slot->sides.find(*key); it != slot->sides.end()) return it->second.get();
    return slot->main && slot->main->tag == key ? slot->main.get() : nullptr;
  };
  Node* n = select(s, parent_id.root);
  for (const auto& c : parent_id.components) {
    if (!n) return nullptr;
    n = select(n->child[c.dir].get(), c.disamb);
  }
  return n ? n->child[dir].get() : nullptr;
}

Slot& Treedoc::materialize_slot(const PosId& slot_id) {
  if (slot_id.components.empty()) return root_;
  PosId parent_id = slot_id;
  const auto dir = parent_id.components.back().dir;
  parent_id.components.pop_back();
  Node& p = materialize(parent_id);
  if (!p.child[dir]) p.child[dir] = std::make_unique<Slot>();
  return *p.child[dir];
}

void Treedoc::gc(const PosId& pos) {
  PosId slot_id = pos;
  SlotKey key;
  if (slot_id.components.empty()) {
    key = slot_id.root;
    slot_id.root.reset();
  } else {
    key = slot_id.components.back().disamb;
    slot_id.components.back().disamb.reset();
  }
  Slot* s = find_slot(slot_id);
  Node* n = nullptr;
  bool is_main = false;
  if (s && !s->flat) {
    if (!key) {
      if (s->main && !s->main->tag) {
        n = s->main.get();
        is_main = true;
      }
    } else if (auto it = s->sides.find(*key); it != s->sides.end()) {
      n = it->second.get();
    } else if (s->main && s->main->tag == key) {
      n = s->main.get();
      is_main = true;
    }
  }
  if (!n) throw Error(Errc::PreconditionViolated, "gc: no materialized node at " + encode(pos));
  if (n->atom || !n->is_leaf()) throw Error(Errc::PreconditionViolated, "gc: " + encode(pos) + " is not a nil leaf");
  if (is_main) {
    s->main.reset();
  } else {
    s->sides.erase(*key);
  }
  if (s->empty() && !slot_id.components.empty()) {
    // Drop the now-empty slot from its parent.
    PosId parent_id = slot_id;
    const auto dir = parent_id.components.back().dir;
    parent_id.components.pop_back();
    auto v = view_exact(root_, parent_id);
    if (v && v->node()) const_cast<Node*>(v->node())->child[dir].reset();
  }
}

bool Treedoc::clean_side(const PosId& pos) {
  const SlotKey key = pos.last_key();
  if (!key) throw Error(Errc::PreconditionViolated, "clean_side: " + encode(pos) + " is not a side node");
  PosId slot_id = pos;
  if (slot_id.components.empty()) {
    slot_id.root.reset();
  } else {
    slot_id.components.back().disamb.reset();
  }
  Slot* s = find_slot(slot_id);
  if (!s || s->flat) throw Error(Errc::PreconditionViolated, "clean_side: no slot for " + encode(pos));
  if (s->main && s->main->tag == key) return false;  // already promoted
  auto it = s->sides.find(*key);
  if (it == s->sides.end()) throw Error(Errc::PreconditionViolated, "clean_side: no side node " + encode(pos));
  if (s->sides.size() != 1) return false;
  if (s->main && !structural_nil_leaf(*s->main)) return false;
  s->main = std::move(it->second);
  s->main->tag = key;
  s->sides.clear();
  return true;
}

std::vector<GcCandidate> Treedoc::nil_leaves() const {
  std::vector<GcCandidate> out;
  PosId path;
  auto visit = [&](const PosId& id, const NodeView& n) {
    const Node* node = n.node();
    if (node && !node->atom && node->is_leaf()) {
      out.push_back({id, node->deleted ? node->deleted_by : std::nullopt});
    }
    return false;
  };
  walk(SlotView(&root_), path, true, 0, visit);
  return out;
}

std::vector<PosId> Treedoc::lone_sides() const {
  std::vector<PosId> out;
  PosId path;
  auto visit = [&](const PosId& id, const NodeView& n) {
    const Node* node = n.node();
    if (!node || !id.last_key()) return false;
    // Locate the slot holding this entry through the parent view.
    PosId slot_id = id;
    if (slot_id.components.empty()) {
      slot_id.root.reset();
    } else {
      slot_id.components.back().disamb.reset();
    }
    const Slot* s = nullptr;
    if (slot_id.components.empty()) {
      s = &root_;
    } else {
      PosId parent_id = slot_id;
      const auto dir = parent_id.components.back().dir;
      parent_id.components.pop_back();
      auto pv = view_exact(root_, parent_id);
      if (pv && pv->node()) s = pv->node()->child[dir].get();
    }
    if (s && s->sides.size() == 1 && s->sides.begin()->second.get() == node &&
        (!s->main || structural_nil_leaf(*s->main))) {
      out.push_back(id);
    }
    return false;
  };
  walk(SlotView(&root_), path, true, 0, visit);
  return out;
}

namespace {

// Returns the number of atoms under `s`, adding dead nodes to `dead`.
std::size_t count_dead(const Slot& s, std::size_t& dead) {
  if (s.flat) return s.flat->length;
  std::size_t live = 0;
  auto visit = [&](const Node& n) {
    std::size_t below = n.atom ? 1 : 0;
    for (const auto& c : n.child) {
      if (c) below += count_dead(*c, dead);
    }
    if (below == 0) ++dead;
    live += below;
  };
  if (s.main) visit(*s.main);
  for (const auto& [d, n] : s.sides) visit(*n);
  return live;
}

}  // namespace

std::size_t Treedoc::dead_nodes() const {
  std::size_t dead = 0;
  count_dead(root_, dead);
  return dead;
}

std::optional<std::vector<Atom>> Treedoc::slot_contents(const PosId& slot_id) const {
  SlotView s;
  if (slot_id.components.empty()) {
    s = SlotView(&root_);
  } else {
    PosId parent_id = slot_id;
    const auto dir = parent_id.components.back().dir;
    parent_id.components.pop_back();
    auto p = view_exact(root_, parent_id);
    if (!p) return std::nullopt;
    s = p->child(dir);
  }
  bool any = false;
  s.for_each([&](const SlotKey&, const NodeView&) {
    any = true;
    return true;
  });
  if (!any && !slot_id.components.empty()) return std::nullopt;  // the root slot always exists
  std::vector<Atom> out;
  collect(s, out);
  return out;
}

void Treedoc::commit_flatten(const PosId& slot_id, const std::vector<Atom>& atoms, const OpId& proposal) {
  if (!is_slot_id(slot_id)) throw Error(Errc::PreconditionViolated, encode(slot_id) + " is not a slot");
  const std::string key = encode(slot_id);
  std::uint64_t epoch = 1;
  if (auto it = marks_.find(key); it != marks_.end()) epoch = it->second.second.epoch + 1;

  Slot& s = materialize_slot(slot_id);
  s.main.reset();
  s.sides.clear();
  s.flat.reset();
  if (!atoms.empty()) {
    s.flat = FlatRun{std::make_shared<const std::vector<Atom>>(atoms), 0, atoms.size(), canonical_height(atoms.size()),
                     epoch};
  }
  std::erase_if(marks_, [&](const auto& kv) { return in_slot(kv.second.first, slot_id); });
  marks_[key] = {slot_id, FlattenMark{proposal, epoch}};
}

ResolvedNode Treedoc::resolve_into_flat(const PosId& pos) {
  auto fail = [&] { throw Error(Errc::UnresolvedPath, encode(pos) + " does not resolve"); };
  auto step = [&](Slot& s, const SlotKey& key, SlotKey& used) -> Node* {
    if (s.flat) expand(s);
    if (key) {
      if (auto it = s.sides.find(*key); it != s.sides.end()) {
        used = key;
        return it->second.get();
      }
    }
    if (s.main) {
      used = s.main->tag;
      return s.main.get();
    }
    return nullptr;
  };
  ResolvedNode out;
  Node* n = step(root_, pos.root, out.id.root);
  if (!n) fail();
  for (const auto& c : pos.components) {
    Slot* s = n->child[c.dir].get();
    if (!s) fail();
    SlotKey used;
    n = step(*s, c.disamb, used);
    if (!n) fail();
    out.id.components.push_back({c.dir, used});
  }
  out.atom = n->atom;
  return out;
}

void Treedoc::expand_all() { expand_all_in(root_); }

std::optional<FlattenTag> Treedoc::flatten_tag(const PosId& pos) const {
  const std::pair<PosId, FlattenMark>* best = nullptr;
  for (const auto& [key, entry] : marks_) {
    if (in_slot(pos, entry.first) && (!best || entry.first.size() > best->first.size())) best = &entry;
  }
  if (!best) return std::nullopt;
  return FlattenTag{best->first, best->second.proposal};
}

TreeStats Treedoc::stats() const {
  TreeStats st;
  PosId path;
  std::size_t depth_sum = 0;
  std::size_t bytes = 0;
  auto visit = [&](const PosId& id, const NodeView& n) {
    if (n.materialized()) {
      ++st.nodes;
      if (!n.atom()) ++st.nil_nodes;
    }
    if (n.atom()) {
      ++st.live_atoms;
      const std::size_t depth = id.size() + 1;
      st.max_depth = std::max(st.max_depth, depth);
      depth_sum += depth;
      bytes += encode(id).size();
    }
    return false;
  };
  walk(SlotView(&root_), path, true, 0, visit);

  // Atoms still held in flat runs count as nodes.
  std::size_t flat = 0;
  auto count_flat = [&](auto&& self, const Slot& s) -> void {
    if (s.flat) {
      flat += s.flat->length;
      return;
    }
    auto each = [&](const Node& n) {
      for (const auto& c : n.child) {
        if (c) self(self, *c);
      }
    };
    if (s.main) each(*s.main);
    for (const auto& [d, n] : s.sides) each(*n);
  };
  count_flat(count_flat, root_);
  st.flat_atoms = flat;
  st.nodes += flat;
  if (st.live_atoms) {
    st.avg_depth = static_cast<double>(depth_sum) / static_cast<double>(st.live_atoms);
    st.id_bytes_per_atom = static_cast<double>(bytes) / static_cast<double>(st.live_atoms);
  }
  return st;
}

std::size_t Treedoc::materialized_nodes() const {
  std::size_t count = 0;
  PosId path;
  auto visit = [&](const PosId&, const NodeView& n) {
    if (n.materialized()) ++count;
    return false;
  };
  walk(SlotView(&root_), path, true, 0, visit);
  return count;
}

}  // namespace treedoc
