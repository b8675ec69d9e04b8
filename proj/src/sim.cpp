#include "treedoc/sim.hpp"

#include <algorithm>
#include <functional>

#include "treedoc/error.hpp"

namespace treedoc {

namespace {

[[noreturn]] void illegal(const std::string& why) { throw Error(Errc::IllegalEvent, why); }

std::string describe(const LiveAtom& la) { return encode(la.id) + " " + escape_atom(la.atom); }

// First entry present in exactly one of two sorted live-atom lists.
std::string first_difference(const std::vector<LiveAtom>& a, const std::vector<LiveAtom>& b, SiteId sa, SiteId sb) {
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (i < a.size() && j < b.size() && a[i] == b[j]) {
      ++i;
      ++j;
      continue;
    }
    const bool take_a = j >= b.size() || (i < a.size() && compare(a[i].id, b[j].id) <= 0);
    if (take_a) return "site " + std::to_string(sa) + " has " + describe(a[i]) + ", site " + std::to_string(sb) + " does not";
    return "site " + std::to_string(sb) + " has " + describe(b[j]) + ", site " + std::to_string(sa) + " does not";
  }
  return {};
}

}  // namespace

void World::add_sites(std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) sites_.emplace_back(static_cast<SiteId>(sites_.size()));
}

Site& World::site(SiteId id) {
  if (id >= sites_.size()) illegal("no site " + std::to_string(id));
  return sites_[id];
}

const Site& World::site(SiteId id) const {
  if (id >= sites_.size()) illegal("no site " + std::to_string(id));
  return sites_[id];
}

Site& World::live_site(std::uint64_t id) {
  Site& s = site(static_cast<SiteId>(id));
  if (s.status == Status::Crashed) illegal("site " + std::to_string(id) + " has crashed");
  return s;
}

std::vector<SiteId> World::live() const {
  std::vector<SiteId> out;
  for (const auto& s : sites_) {
    if (s.status != Status::Crashed) out.push_back(s.id());
  }
  return out;
}

std::vector<SiteId> World::connected() const {
  std::vector<SiteId> out;
  for (const auto& s : sites_) {
    if (s.status == Status::Connected) out.push_back(s.id());
  }
  return out;
}

std::set<SiteId> World::required() const {
  std::set<SiteId> out;
  for (const auto& s : sites_) {
    if (s.status != Status::Crashed && !s.suspected) out.insert(s.id());
  }
  return out;
}

bool World::any_required_disconnected() const {
  return std::any_of(sites_.begin(), sites_.end(),
                     [](const Site& s) { return s.status == Status::Disconnected && !s.suspected; });
}

void World::poll() {
  for (int round = 0; round < 10000; ++round) {
    bool progress = false;
    for (auto& s : sites_) {
      if (s.status != Status::Crashed && s.poll() > 0) progress = true;
    }
    // Suspicion never excuses a flatten vote: overlapping proposals could
    // otherwise commit on both sides of a false suspicion.
    std::set<SiteId> voters;
    bool disc = false;
    for (const auto& s : sites_) {
      if (s.status == Status::Crashed) continue;
      voters.insert(s.id());
      if (s.status == Status::Disconnected) disc = true;
    }
    for (auto& s : sites_) {
      if (s.status != Status::Crashed && s.decide_if_ready(voters, disc)) progress = true;
    }
    if (any_crash_) {
      // A crashed coordinator never decides; the lowest live site that knows
      // the proposal aborts it once no live site holds a decision.
      for (auto& s : sites_) {
        if (s.status == Status::Crashed || s.txn_open()) continue;
        std::vector<OpId> orphans;
        for (const auto& [ref, st] : s.proposals()) {
          if (st.committed || sites_[ref.site].status != Status::Crashed) continue;
          const bool decided = std::any_of(sites_.begin(), sites_.end(), [&](const Site& t) {
            return t.status != Status::Crashed && t.has_decision(ref);
          });
          if (!decided) orphans.push_back(ref);
        }
        for (const auto& ref : orphans) {
          s.abort_on_behalf(ref);
          progress = true;
        }
      }
    }
    if (!progress) return;
  }
  throw Error(Errc::IllegalEvent, "delivery did not settle");
}

void World::exchange(SiteId a, SiteId b) {
  if (a == b) illegal("exchange needs two distinct sites");
  Site& sa = site(a);
  Site& sb = site(b);
  for (const Site* s : {&sa, &sb}) {
    if (s->status != Status::Connected) {
      illegal("site " + std::to_string(s->id()) + " is " + to_string(s->status));
    }
  }
  sb.receive(sa.ops_missing_at(sb.vc()));
  sa.receive(sb.ops_missing_at(sa.vc()));
  sa.learn(sb);
  sb.learn(sa);
  poll();
}

std::uint64_t World::knowledge_signature() const {
  std::uint64_t sig = 0;
  for (const auto& s : sites_) {
    if (s.status == Status::Crashed) continue;
    sig += s.log_size() + s.inbox().size();
    for (const auto& [row, vc] : s.mc().rows()) {
      for (const auto& [site, n] : vc.entries()) sig += n;
    }
  }
  return sig;
}

void World::sync() {
  const auto sites = connected();
  for (int round = 0; round < 1000; ++round) {
    const auto before = knowledge_signature();
    for (std::size_t i = 0; i < sites.size(); ++i) {
      for (std::size_t j = i + 1; j < sites.size(); ++j) exchange(sites[i], sites[j]);
    }
    if (knowledge_signature() == before) return;
  }
  throw Error(Errc::IllegalEvent, "anti-entropy did not settle");
}

void World::quiesce() {
  for (auto& s : sites_) {
    if (s.status == Status::Crashed) continue;
    if (s.txn_open()) s.txn_end();
    s.status = Status::Connected;
    s.suspected = false;
  }
  poll();
  sync();
  const auto req = required();
  for (auto& s : sites_) {
    if (s.status != Status::Crashed) s.compact(req);
  }
}

void World::crash(SiteId id) {
  Site& s = live_site(id);
  std::uint64_t known = 0;
  for (const auto& t : sites_) {
    if (t.id() == id || t.status == Status::Crashed) continue;
    known = std::max(known, t.vc().get(id));
    for (const auto& [op_id, op] : t.inbox().pending()) {
      if (op_id.site == id) known = std::max(known, op_id.seq);
    }
  }
  for (const auto& op : s.log_of(id)) {
    if (op.seq > known && op.is_edit()) ++crash_lost_;
  }
  s.status = Status::Crashed;
  any_crash_ = true;
  faults_seen_ = true;
}

std::optional<CheckResult> World::execute(const Event& e) {
  auto arg = [&](std::size_t i) { return e.args.at(i); };
  const bool assertion = e.kind == EventKind::Check || e.kind == EventKind::Expect || e.kind == EventKind::ExpectId ||
                         e.kind == EventKind::ExpectDepth || e.kind == EventKind::ExpectFlattens;
  if (!assertion) quiescent_ = false;

  std::optional<CheckResult> result;
  auto expect = [&](bool ok, const std::string& what) {
    CheckResult r;
    r.ok = ok;
    if (!ok) r.failures.push_back(what);
    result = r;
  };

  switch (e.kind) {
    case EventKind::Sites:
      if (!sites_.empty()) illegal("sites already declared");
      add_sites(arg(0));
      break;
    case EventKind::Insert:
      live_site(arg(0)).insert(arg(1), e.text);
      break;
    case EventKind::Type: {
      Site& s = live_site(arg(0));
      for (std::size_t i = 0; i < e.text.size(); ++i) s.insert(arg(1) + i, Atom(1, e.text[i]));
      break;
    }
    case EventKind::Delete:
      live_site(arg(0)).erase(arg(1));
      break;
    case EventKind::Exchange:
      exchange(static_cast<SiteId>(arg(0)), static_cast<SiteId>(arg(1)));
      break;
    case EventKind::Sync:
      sync();
      break;
    case EventKind::Disconnect: {
      Site& s = live_site(arg(0));
      if (s.status != Status::Connected) illegal("site " + std::to_string(arg(0)) + " is not connected");
      s.status = Status::Disconnected;
      break;
    }
    case EventKind::Reconnect: {
      Site& s = live_site(arg(0));
      if (s.status != Status::Disconnected) illegal("site " + std::to_string(arg(0)) + " is not disconnected");
      s.status = Status::Connected;
      s.suspected = false;
      break;
    }
    case EventKind::Crash:
      crash(static_cast<SiteId>(arg(0)));
      break;
    case EventKind::Recover: {
      const auto dead = static_cast<SiteId>(arg(0));
      if (site(dead).status != Status::Crashed) illegal("site " + std::to_string(dead) + " has not crashed");
      if (recovered_.count(dead)) illegal("site " + std::to_string(dead) + " was already recovered");
      Site fresh = live_site(arg(1)).recover_as(static_cast<SiteId>(sites_.size()));
      recovered_.insert(dead);
      sites_.push_back(std::move(fresh));
      sites_.back().vote_pending();
      break;
    }
    case EventKind::Suspect: {
      Site& s = live_site(arg(0));
      if (s.status != Status::Connected) illegal("site " + std::to_string(arg(0)) + " is not connected");
      s.status = Status::Disconnected;
      s.suspected = true;
      faults_seen_ = true;
      break;
    }
    case EventKind::Flatten:
      live_site(arg(0)).propose_flatten(e.pos);
      break;
    case EventKind::TxnBegin:
      live_site(arg(0)).txn_begin();
      break;
    case EventKind::TxnEnd:
      live_site(arg(0)).txn_end();
      break;
    case EventKind::Compact:
      live_site(arg(0)).compact(required());
      break;
    case EventKind::Heartbeat:
      live_site(arg(0)).heartbeat();
      break;
    case EventKind::Tick:
      break;
    case EventKind::Quiesce:
      quiesce();
      quiescent_ = true;
      return std::nullopt;
    case EventKind::Drop:
      live_site(arg(0)).drop_last_op();
      break;
    case EventKind::Check:
      return check();
    case EventKind::Expect: {
      const auto got = site(static_cast<SiteId>(arg(0))).doc().render();
      expect(got == e.text, "site " + std::to_string(arg(0)) + " renders '" + got + "', expected '" + e.text + "'");
      return result;
    }
    case EventKind::ExpectId: {
      const auto& doc = site(static_cast<SiteId>(arg(0))).doc();
      const std::string got = arg(1) < doc.size() ? encode(doc.uid_at(arg(1))) : std::string("<none>");
      expect(got == encode(e.pos), "site " + std::to_string(arg(0)) + " index " + std::to_string(arg(1)) + " has id " +
                                       got + ", expected " + encode(e.pos));
      return result;
    }
    case EventKind::ExpectDepth: {
      const auto got = site(static_cast<SiteId>(arg(0))).doc().stats().max_depth;
      expect(got == arg(1), "site " + std::to_string(arg(0)) + " depth " + std::to_string(got) + ", expected " +
                                std::to_string(arg(1)));
      return result;
    }
    case EventKind::ExpectFlattens: {
      const auto m = metrics();
      expect(m.flatten_commits == arg(0) && m.flatten_aborts == arg(1),
             "flattens committed/aborted " + std::to_string(m.flatten_commits) + "/" +
                 std::to_string(m.flatten_aborts) + ", expected " + std::to_string(arg(0)) + "/" +
                 std::to_string(arg(1)));
      return result;
    }
  }
  poll();
  return std::nullopt;
}

CheckResult World::check() const {
  CheckResult r;
  auto fail = [&](std::string what) {
    r.ok = false;
    r.failures.push_back(std::move(what));
  };
  const auto ids = live();
  std::vector<std::vector<LiveAtom>> states;
  states.reserve(ids.size());
  for (auto id : ids) states.push_back(sites_[id].doc().live_atoms());

  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const Site& a = sites_[ids[i]];
      const Site& b = sites_[ids[j]];
      const bool same_history = a.vc() == b.vc();
      if (!same_history && !quiescent_) continue;
      if (!same_history) {
        fail("sites " + std::to_string(a.id()) + " and " + std::to_string(b.id()) + " delivered different operations");
      }
      if (states[i] != states[j]) {
        fail("sites " + std::to_string(a.id()) + " and " + std::to_string(b.id()) + " diverge");
        if (r.witness.empty()) r.witness = first_difference(states[i], states[j], a.id(), b.id());
      } else if (a.doc().render() != b.doc().render()) {
        fail("sites " + std::to_string(a.id()) + " and " + std::to_string(b.id()) + " render differently");
      }
    }
  }
  for (auto id : ids) {
    const Site& s = sites_[id];
    const auto& c = s.counters();
    const auto name = "site " + std::to_string(id);
    if (c.causal_violations) fail(name + " delivered out of causal order");
    if (c.early_deletes) fail(name + " delivered a delete before its insert");
    if (c.compaction_render_changes) fail(name + " changed its rendering during compaction");
    if (c.content_mismatches && !faults_seen_) fail(name + " committed a flatten over different content");
    if (quiescent_) {
      if (!s.inbox().empty()) fail(name + " still holds undeliverable operations");
      if (const auto dead = s.doc().dead_nodes()) fail(name + " kept " + std::to_string(dead) + " dead nodes");
      for (const auto& [ref, st] : s.proposals()) {
        if (!st.committed) fail(name + " never learned the outcome of flatten " + encode(ref));
      }
    }
  }
  return r;
}

Metrics World::metrics() const {
  Metrics m;
  std::size_t nodes = 0, nils = 0;
  std::set<OpId> lost;
  for (const auto& s : sites_) {
    m.ops_initiated += s.counters().initiated;
    m.flatten_commits += s.counters().flatten_commits;
    m.flatten_aborts += s.counters().flatten_aborts;
    m.gc_removed += s.counters().gc_removed;
    m.sides_cleaned += s.counters().sides_cleaned;
    if (s.status == Status::Crashed) continue;
    ++m.live_sites;
    const auto st = s.doc().stats();
    m.atoms = std::max(m.atoms, st.live_atoms);
    m.max_depth = std::max(m.max_depth, st.max_depth);
    m.avg_depth += st.avg_depth;
    m.id_bytes_per_atom += st.id_bytes_per_atom;
    nodes += st.nodes;
    nils += st.nil_nodes;
    lost.insert(s.lost().begin(), s.lost().end());
  }
  if (m.live_sites) {
    m.avg_depth /= static_cast<double>(m.live_sites);
    m.id_bytes_per_atom /= static_cast<double>(m.live_sites);
  }
  if (nodes) m.nil_ratio = static_cast<double>(nils) / static_cast<double>(nodes);
  m.lost_ops = lost.size() + crash_lost_;
  return m;
}

Multilog collect_multilog(const World& w) {
  std::map<OpId, Operation> all;
  for (auto id : w.live()) {
    const Site& s = w.site(id);
    for (SiteId origin = 0; origin < w.size(); ++origin) {
      for (const auto& op : s.log_of(origin)) {
        if (op.is_edit()) all.emplace(op.id(), op);
      }
    }
  }
  Multilog m;
  for (auto& [id, op] : all) m.ops.push_back(std::move(op));
  return m;
}

ScheduleReport enumerate_and_check(const Multilog& m, std::size_t bound) {
  const auto n = m.ops.size();
  if (n > bound) {
    throw Error(Errc::BoundExceeded, std::to_string(n) + " operations exceed the bound of " + std::to_string(bound));
  }
  // pred[i] = ops that must precede op i.
  std::vector<std::vector<std::size_t>> pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && happens_before(m.ops[j], m.ops[i])) pred[i].push_back(j);
    }
  }
  ScheduleReport report;
  std::optional<std::vector<LiveAtom>> reference;
  std::vector<std::size_t> order;
  std::vector<bool> placed(n, false);

  std::function<void()> extend = [&] {
    if (order.size() == n) {
      Treedoc doc;
      for (auto i : order) {
        const auto& op = m.ops[i];
        if (op.kind == OpKind::Insert) {
          doc.insert_atom(op.atom, op.pos, false);
        } else {
          doc.delete_atom(op.pos, false, op.id());
        }
      }
      ++report.schedules;
      auto state = doc.live_atoms();
      if (!reference) {
        reference = std::move(state);
      } else if (state != *reference) {
        report.equivalent = false;
      }
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (placed[i]) continue;
      if (!std::all_of(pred[i].begin(), pred[i].end(), [&](std::size_t p) { return placed[p]; })) continue;
      placed[i] = true;
      order.push_back(i);
      extend();
      order.pop_back();
      placed[i] = false;
    }
  };
  extend();
  return report;
}

}  // namespace treedoc
