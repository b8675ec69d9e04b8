#include "treedoc/site.hpp"

#include "treedoc/error.hpp"

namespace treedoc {

const char* to_string(Status s) noexcept {
  switch (s) {
    case Status::Connected: return "connected";
    case Status::Disconnected: return "disconnected";
    case Status::Crashed: return "crashed";
  }
  return "?";
}

namespace {

bool concurrent_with(const Operation& op, const FlattenProposal& p) {
  if (op.id() == p.id) return false;
  const bool before = p.stamp.get(op.site) >= op.seq;
  const bool after = op.stamp.get(p.id.site) >= p.id.seq;
  return !before && !after;
}

}  // namespace

Site::Site(SiteId id) : id_(id) {}

Operation& Site::initiate(Operation op) {
  op.site = id_;
  op.seq = vc_.increment(id_);
  op.stamp = vc_;
  mc_.observe(id_, vc_);
  if (local_.open()) txn_members_[*local_.start()].push_back(op.id());
  ++counters_.initiated;
  auto& ops = log_[id_];
  ops.push_back(std::move(op));
  return ops.back();
}

void Site::record_edit(const Operation& op, const std::optional<OpId>& txn) {
  executed_edits_.push_back(op.id());
  if (txn) txn_of_[op.id()] = *txn;
}

void Site::check_unlocked(const PosId& pos) const {
  for (const auto& [ref, st] : proposals_) {
    if (st.committed) continue;
    const bool holding = ref.site == id_ || st.my_vote == true;
    if (holding && in_slot(pos, st.proposal.slot)) {
      throw Error(Errc::SubtreeLocked, encode(pos) + " lies in slot " + encode(st.proposal.slot) +
                                           " prepared for flatten " + encode(ref));
    }
  }
}

PosId Site::insert(std::size_t index, const Atom& atom) {
  if (atom.empty()) throw Error(Errc::PreconditionViolated, "atom must not be nil");
  auto [prev, next] = doc_.neighbors_for_insert(index);
  const PosId pos = doc_.new_uid(prev, next, Disambiguator{next_seq(), id_});
  check_unlocked(pos);
  Operation op;
  op.kind = OpKind::Insert;
  op.pos = pos;
  op.atom = atom;
  op.tag = doc_.flatten_tag(pos);
  doc_.insert_atom(atom, pos, true);
  record_edit(initiate(std::move(op)), local_.start());
  return pos;
}

PosId Site::erase(std::size_t index) {
  const PosId pos = doc_.uid_at(index);
  check_unlocked(pos);
  Operation op;
  op.kind = OpKind::Delete;
  op.pos = pos;
  op.tag = doc_.flatten_tag(pos);
  doc_.delete_atom(pos, true, OpId{id_, next_seq()});
  record_edit(initiate(std::move(op)), local_.start());
  return pos;
}

void Site::txn_begin() {
  local_.begin(OpId{id_, next_seq()});
  Operation op;
  op.kind = OpKind::TxnStart;
  initiate(std::move(op));
}

void Site::txn_end() {
  if (!local_.open()) throw Error(Errc::NoOpenTransaction, "site " + std::to_string(id_) + " has no open transaction");
  Operation op;
  op.kind = OpKind::TxnEnd;
  initiate(std::move(op));
  local_.end();
}

void Site::heartbeat() {
  Operation op;
  op.kind = OpKind::NoOp;
  initiate(std::move(op));
}

OpId Site::propose_flatten(const PosId& slot) {
  if (local_.open()) throw Error(Errc::IllegalEvent, "flatten proposed inside an open transaction");
  if (coordinating_) throw Error(Errc::IllegalEvent, "flatten " + encode(*coordinating_) + " still in flight");
  if (!is_slot_id(slot)) throw Error(Errc::PreconditionViolated, encode(slot) + " is not a slot identifier");
  auto content = doc_.slot_contents(slot);
  if (!content) throw Error(Errc::StaleProposal, "slot " + encode(slot) + " does not exist");
  Operation op;
  op.kind = OpKind::FlattenPropose;
  op.pos = slot;
  op.content = std::move(*content);
  const FlattenProposal p = FlattenProposal::from(initiate(std::move(op)));
  proposals_.emplace(p.id, ProposalState{p, std::nullopt, std::nullopt, {}, std::nullopt});
  coordinating_ = p.id;
  if (!vote_yes(p)) issue_decision(p.id, false);
  return p.id;
}

void Site::issue_decision(const OpId& ref, bool commit) {
  Operation op;
  op.kind = OpKind::FlattenDecide;
  op.pos = proposals_.at(ref).proposal.slot;
  op.yes = commit;
  op.ref = ref;
  const OpId decided_by = initiate(std::move(op)).id();
  ++(commit ? counters_.flatten_commits : counters_.flatten_aborts);
  apply_decision(ref, commit, decided_by);
}

bool Site::decide_if_ready(const std::set<SiteId>& required, bool any_required_disconnected) {
  if (!coordinating_) return false;
  const auto& st = proposals_.at(*coordinating_);
  if (st.committed) {
    coordinating_.reset();
    return false;
  }
  const Outcome o = decide(st.proposal, st.votes, required, any_required_disconnected);
  if (o == Outcome::Pending) return false;
  issue_decision(*coordinating_, o == Outcome::Commit);
  return true;
}

void Site::abort_on_behalf(const OpId& proposal) {
  const auto it = proposals_.find(proposal);
  if (it == proposals_.end() || it->second.committed) return;
  issue_decision(proposal, false);
}

void Site::vote_pending() {
  std::vector<OpId> todo;
  for (const auto& [ref, st] : proposals_) {
    if (!st.committed && !st.my_vote && ref.site != id_) todo.push_back(ref);
  }
  for (const auto& ref : todo) cast_vote(ref);
}

bool Site::vote_yes(const FlattenProposal& p) const {
  if (doc_.slot_contents(p.slot).value_or(std::vector<Atom>{}) != p.content) return false;
  for (const auto& id : executed_edits_) {
    const Operation* e = find(id);
    if (!e || !in_slot(e->pos, p.slot)) continue;
    if (edit_conflicts(p, *e)) return false;
    // Any operation of the edit's transaction concurrent with the proposal.
    if (auto t = txn_of_.find(id); t != txn_of_.end()) {
      for (const auto& m : txn_members_.at(t->second)) {
        const Operation* mop = find(m);
        if (mop && concurrent_with(*mop, p)) return false;
      }
    }
  }
  for (const auto& [ref, st] : proposals_) {
    if (ref == p.id || !slots_overlap(st.proposal.slot, p.slot)) continue;
    const Operation* q = find(ref);
    if (!q) continue;
    if (concurrent_with(*q, p)) {
      if (st.committed == true) return false;
      if (!st.committed && (ref.site == id_ || st.my_vote == true)) return false;
    } else if (p.stamp.get(ref.site) >= ref.seq) {
      // An earlier overlapping flatten the proposer saw undecided: its
      // commit would rename the slot under the proposer's feet.
      if (!st.committed) return false;
      if (*st.committed && p.stamp.get(st.decided_by->site) < st.decided_by->seq) return false;
    }
  }
  return true;
}

void Site::cast_vote(const OpId& ref) {
  auto& st = proposals_.at(ref);
  const bool yes = vote_yes(st.proposal);
  st.my_vote = yes;
  Operation op;
  op.kind = OpKind::FlattenVote;
  op.pos = st.proposal.slot;
  op.yes = yes;
  op.ref = ref;
  initiate(std::move(op));
}

std::vector<Operation> Site::ops_missing_at(const VectorClock& peer) const {
  std::vector<Operation> out;
  for (const auto& [origin, ops] : log_) {
    std::size_t limit = ops.size();
    if (origin == id_ && local_.open()) limit = local_.start()->seq - 1;  // open transaction stays local
    for (auto i = static_cast<std::size_t>(peer.get(origin)); i < limit; ++i) {
      if (unshipped_.count(ops[i].id())) break;
      out.push_back(ops[i]);
    }
  }
  return out;
}

void Site::receive(const std::vector<Operation>& ops) {
  for (const auto& op : ops) inbox_.add(op, vc_);
}

void Site::learn(const Site& peer) { mc_.merge(peer.mc_); }

std::size_t Site::poll() {
  if (local_.open()) return 0;
  std::size_t n = 0;
  while (auto op = inbox_.pop_ready(vc_)) {
    deliver(*op);
    ++n;
  }
  return n;
}

void Site::deliver(const Operation& op) {
  if (!causally_ready(op, vc_)) {
    ++counters_.causal_violations;
    return;
  }
  if (op.kind == OpKind::Delete) {
    const auto& key = op.pos.last_key();
    if (key && vc_.get(key->site) < key->counter) ++counters_.early_deletes;
  }
  vc_.merge(op.stamp);
  mc_.observe(id_, vc_);
  mc_.observe(op.site, op.stamp);
  log_[op.site].push_back(op);
  ++counters_.delivered;

  auto group = remote_.feed(op);
  std::optional<OpId> txn;
  if (!group.empty() && group.front().kind == OpKind::TxnStart) {
    txn = group.front().id();
    auto& members = txn_members_[*txn];
    for (const auto& g : group) members.push_back(g.id());
  }
  for (const auto& g : group) apply(g, txn);
}

void Site::apply(const Operation& op, const std::optional<OpId>& txn) {
  switch (op.kind) {
    case OpKind::Insert:
    case OpKind::Delete:
      if (apply_edit(op)) record_edit(op, txn);
      break;
    case OpKind::NoOp:
    case OpKind::TxnStart:
    case OpKind::TxnEnd:
      break;
    case OpKind::FlattenPropose: {
      const auto p = FlattenProposal::from(op);
      proposals_.emplace(p.id, ProposalState{p, std::nullopt, std::nullopt, {}, std::nullopt});
      if (op.site != id_) cast_vote(p.id);
      break;
    }
    case OpKind::FlattenVote:
      if (op.ref.site == id_) {
        if (auto it = proposals_.find(op.ref); it != proposals_.end()) it->second.votes[op.site] = op.yes;
      }
      break;
    case OpKind::FlattenDecide:
      apply_decision(op.ref, op.yes, op.id());
      break;
  }
}

bool Site::apply_edit(const Operation& op) {
  if (doc_.flatten_tag(op.pos) != op.tag) {
    ++counters_.lost_ops;
    lost_.insert(op.id());
    return false;
  }
  if (op.kind == OpKind::Delete) {
    doc_.delete_atom(op.pos, false, op.id());
  } else {
    doc_.insert_atom(op.atom, op.pos, false);
  }
  return true;
}

void Site::apply_decision(const OpId& ref, bool commit, const OpId& decided_by) {
  auto it = proposals_.find(ref);
  if (it == proposals_.end() || it->second.committed) return;
  auto& st = it->second;
  st.committed = commit;
  st.decided_by = decided_by;
  if (coordinating_ == ref) coordinating_.reset();
  if (!commit) return;
  if (doc_.slot_contents(st.proposal.slot).value_or(std::vector<Atom>{}) != st.proposal.content) {
    ++counters_.content_mismatches;
  }
  doc_.commit_flatten(st.proposal.slot, st.proposal.content, ref);
}

bool Site::has_decision(const OpId& proposal) const {
  if (auto it = proposals_.find(proposal); it != proposals_.end() && it->second.committed) return true;
  for (const auto& [id, op] : inbox_.pending()) {
    if (op.kind == OpKind::FlattenDecide && op.ref == proposal) return true;
  }
  return false;
}

std::size_t Site::compact(const std::set<SiteId>& required) {
  const std::vector<SiteId> req(required.begin(), required.end());
  const auto before = doc_.contents();
  std::size_t changed = 0;
  for (bool progress = true; progress;) {
    progress = false;
    for (const auto& c : doc_.nil_leaves()) {
      if (c.deleted_by && !stable_delete(*c.deleted_by, mc_, req)) continue;
      doc_.gc(c.id);
      ++counters_.gc_removed;
      ++changed;
      progress = true;
    }
  }
  for (const auto& id : doc_.lone_sides()) {
    const auto& key = id.last_key();
    if (!stable_insert(OpId{key->site, key->counter}, mc_, vc_, req)) continue;
    if (doc_.clean_side(id)) {
      ++counters_.sides_cleaned;
      ++changed;
    }
  }
  if (doc_.contents() != before) ++counters_.compaction_render_changes;
  return changed;
}

Site Site::recover_as(SiteId new_id) const {
  // Edits of an open transaction were never shipped; a copy would leak them.
  if (local_.open()) throw Error(Errc::IllegalEvent, "donor has an open transaction");
  Site s = *this;
  s.id_ = new_id;
  s.status = Status::Connected;
  s.suspected = false;
  s.local_ = LocalTxn{};
  s.coordinating_.reset();
  s.counters_ = SiteCounters{};
  s.lost_.clear();
  for (auto& [ref, st] : s.proposals_) {
    st.my_vote.reset();
    st.votes.clear();
  }
  s.mc_.observe(new_id, s.vc_);
  return s;
}

void Site::drop_last_op() {
  if (const auto n = vc_.get(id_)) unshipped_.insert(OpId{id_, n});
}

const std::vector<Operation>& Site::log_of(SiteId origin) const {
  static const std::vector<Operation> none;
  auto it = log_.find(origin);
  return it == log_.end() ? none : it->second;
}

std::size_t Site::log_size() const {
  std::size_t n = 0;
  for (const auto& [origin, ops] : log_) n += ops.size();
  return n;
}

const Operation* Site::find(const OpId& id) const {
  auto it = log_.find(id.site);
  if (it == log_.end() || id.seq == 0 || id.seq > it->second.size()) return nullptr;
  return &it->second[id.seq - 1];
}

}  // namespace treedoc
