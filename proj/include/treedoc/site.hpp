#pragma once

// One replica: document, clocks, delivery and transaction buffers, the log
// it ships to peers, and its part in flatten commitment.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "treedoc/causal.hpp"
#include "treedoc/clock.hpp"
#include "treedoc/structure.hpp"
#include "treedoc/tree.hpp"
#include "treedoc/txn.hpp"

namespace treedoc {

enum class Status { Connected, Disconnected, Crashed };

const char* to_string(Status s) noexcept;

struct SiteCounters {
  std::uint64_t initiated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost_ops = 0;            // edits dropped on replay: stale flatten tag
  std::uint64_t early_deletes = 0;   // delete delivered before its insert
  std::uint64_t causal_violations = 0;
  std::uint64_t content_mismatches = 0;  // committed flatten content differed from local subtree
  std::uint64_t compaction_render_changes = 0;
  std::uint64_t gc_removed = 0;
  std::uint64_t sides_cleaned = 0;
  std::uint64_t flatten_commits = 0;     // as coordinator
  std::uint64_t flatten_aborts = 0;
};

struct ProposalState {
  FlattenProposal proposal;
  std::optional<bool> my_vote;    // unset at the proposer and before voting
  std::optional<bool> committed;  // unset until decided
  std::map<SiteId, bool> votes;   // collected by the proposer
  std::optional<OpId> decided_by; // the decision operation, once known
};

class Site : public EditSink {
 public:
  explicit Site(SiteId id);

  SiteId id() const noexcept { return id_; }

  Status status = Status::Connected;
  bool suspected = false;  // oracle treats it as crashed while set

  // Local editing. Each throws before changing anything.
  PosId insert(std::size_t index, const Atom& atom);
  PosId erase(std::size_t index);
  void txn_begin() override;
  void txn_end() override;
  void insert_at(std::size_t index, const Atom& atom) override { insert(index, atom); }
  void delete_at(std::size_t index) override { erase(index); }
  std::vector<Atom> text() const override { return doc_.contents(); }
  void heartbeat();

  /// Starts two-phase commit for flattening `slot`, with this site as
  /// coordinator. Throws IllegalEvent (open transaction or proposal already
  /// in flight) or StaleProposal (slot absent).
  OpId propose_flatten(const PosId& slot);

  /// Coordinator step: issues the decision once it is known.
  bool decide_if_ready(const std::set<SiteId>& required, bool any_required_disconnected);

  /// Aborts a proposal whose coordinator has crashed.
  void abort_on_behalf(const OpId& proposal);

  /// Casts a vote on every known undecided proposal it has not voted on.
  void vote_pending();

  // Replication.
  std::vector<Operation> ops_missing_at(const VectorClock& peer) const;
  void receive(const std::vector<Operation>& ops);
  void learn(const Site& peer);  // matrix-clock knowledge from a peer
  std::size_t poll();            // delivers ready operations; none while a local transaction is open

  /// gc of stably deleted leaves and cleanSide of stably inserted lone side
  /// nodes, repeated to a fixed point. Returns nodes removed plus promoted.
  std::size_t compact(const std::set<SiteId>& required);

  /// State copy under a new identity (crash recovery).
  Site recover_as(SiteId new_id) const;

  /// Negative control: the most recent local operation is never shipped.
  void drop_last_op();

  // Observation.
  const Treedoc& doc() const noexcept { return doc_; }
  const VectorClock& vc() const noexcept { return vc_; }
  const MatrixClock& mc() const noexcept { return mc_; }
  const SiteCounters& counters() const noexcept { return counters_; }
  bool txn_open() const noexcept { return local_.open(); }
  const std::optional<OpId>& coordinating() const noexcept { return coordinating_; }
  const std::map<OpId, ProposalState>& proposals() const noexcept { return proposals_; }
  const DeliveryBuffer& inbox() const noexcept { return inbox_; }
  bool buffering_remote_txn() const noexcept { return !remote_.empty(); }
  /// Delivered a decision for `proposal`, or holds one pending.
  bool has_decision(const OpId& proposal) const;
  /// Delivered or initiated operations from `origin`, in sequence order.
  const std::vector<Operation>& log_of(SiteId origin) const;
  std::size_t log_size() const;
  /// Remote edits dropped because their flatten tag was stale.
  const std::set<OpId>& lost() const noexcept { return lost_; }

 private:
  Operation& initiate(Operation op);
  void deliver(const Operation& op);
  void apply(const Operation& op, const std::optional<OpId>& txn);
  bool apply_edit(const Operation& op);
  void apply_decision(const OpId& ref, bool commit, const OpId& decided_by);
  void issue_decision(const OpId& ref, bool commit);
  void record_edit(const Operation& op, const std::optional<OpId>& txn);
  bool vote_yes(const FlattenProposal& p) const;
  void cast_vote(const OpId& proposal);
  void check_unlocked(const PosId& pos) const;
  std::uint64_t next_seq() const { return vc_.get(id_) + 1; }
  const Operation* find(const OpId& id) const;

  SiteId id_;
  Treedoc doc_;
  VectorClock vc_;
  MatrixClock mc_;
  DeliveryBuffer inbox_;
  TxnBuffer remote_;
  LocalTxn local_;
  std::map<SiteId, std::vector<Operation>> log_;
  std::vector<OpId> executed_edits_;
  std::map<OpId, OpId> txn_of_;                 // edit -> its transaction's start marker
  std::map<OpId, std::vector<OpId>> txn_members_;
  std::map<OpId, ProposalState> proposals_;
  std::optional<OpId> coordinating_;
  std::set<OpId> unshipped_;
  std::set<OpId> lost_;
  SiteCounters counters_;
};

}  // namespace treedoc
