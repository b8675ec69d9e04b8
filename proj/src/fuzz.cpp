#include "treedoc/fuzz.hpp"

#include <random>

#include "treedoc/error.hpp"

namespace treedoc {

FaultProfile FaultProfile::parse(std::string_view text) {
  FaultProfile p;
  if (text == "none" || text.empty()) return p;
  if (text == "all") return {true, true, true};
  std::size_t i = 0;
  while (i <= text.size()) {
    auto j = text.find('+', i);
    if (j == std::string_view::npos) j = text.size();
    const auto part = text.substr(i, j - i);
    if (part == "partition") {
      p.partition = true;
    } else if (part == "crash") {
      p.crash = true;
    } else if (part == "suspect") {
      p.suspect = true;
    } else {
      throw Error(Errc::ParseError, "unknown fault profile '" + std::string(part) + "'");
    }
    i = j + 1;
  }
  return p;
}

std::string FaultProfile::name() const {
  std::string out;
  auto add = [&](bool on, const char* n) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += n;
  };
  add(partition, "partition");
  add(crash, "crash");
  add(suspect, "suspect");
  return out.empty() ? "none" : out;
}

namespace {

class Generator {
 public:
  Generator(World& w, const FuzzOptions& opt) : w_(w), opt_(opt), rng_(opt.seed) {}

  std::uint64_t below(std::uint64_t n) { return n ? rng_() % n : 0; }

  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

  Event make(EventKind k, std::vector<std::uint64_t> args = {}) {
    Event e;
    e.kind = k;
    e.args = std::move(args);
    return e;
  }

  Event next() {
    const auto live = w_.live();
    const SiteId s = pick(live);
    const Site& site = w_.site(s);

    // Keep transactions short.
    for (auto id : live) {
      if (w_.site(id).txn_open() && below(6) == 0) return make(EventKind::TxnEnd, {id});
    }
    if (opt_.flatten && ++since_depth_check_ >= 40) {
      since_depth_check_ = 0;
      const auto st = site.doc().stats();
      if (st.max_depth > 2 * static_cast<std::size_t>(canonical_height(st.live_atoms)) + 3) {
        return make(EventKind::Flatten, {s});
      }
    }

    const auto r = below(100);
    if (r < 42) {
      Event e = make(EventKind::Insert, {s, below(site.doc().size() + 1)});
      e.text = std::string(1, static_cast<char>('a' + below(26)));
      return e;
    }
    if (r < 58) {
      const auto n = site.doc().size();
      if (n == 0) return make(EventKind::Heartbeat, {s});
      return make(EventKind::Delete, {s, below(n)});
    }
    if (r < 80) {
      const auto conn = w_.connected();
      if (conn.size() < 2) return make(EventKind::Heartbeat, {s});
      const auto a = pick(conn);
      auto b = pick(conn);
      while (b == a) b = pick(conn);
      return make(EventKind::Exchange, {a, b});
    }
    if (r < 83) return make(EventKind::Heartbeat, {s});
    if (r < 86) return make(EventKind::Compact, {s});
    if (r < 89) {
      if (!opt_.transactions) return make(EventKind::Tick);
      return make(site.txn_open() ? EventKind::TxnEnd : EventKind::TxnBegin, {s});
    }
    if (r < 91) {
      if (!opt_.flatten) return make(EventKind::Tick);
      Event e = make(EventKind::Flatten, {s});
      const auto n = site.doc().size();
      if (n > 0 && below(2)) {
        // The slot holding a random atom.
        PosId slot = site.doc().uid_at(below(n));
        if (slot.components.empty()) {
          slot.root.reset();
        } else {
          slot.components.back().disamb.reset();
        }
        e.pos = slot;
      }
      return e;
    }
    if (r < 96) return fault(s);
    return make(EventKind::Tick);
  }

 private:
  Event fault(SiteId s) {
    std::vector<int> kinds;
    if (opt_.faults.partition) kinds.push_back(0);
    if (opt_.faults.crash) kinds.push_back(1);
    if (opt_.faults.suspect) kinds.push_back(2);
    if (kinds.empty()) return make(EventKind::Tick);
    const Site& site = w_.site(s);
    switch (pick(kinds)) {
      case 0:
        if (site.status == Status::Disconnected && !site.suspected) return make(EventKind::Reconnect, {s});
        if (site.status == Status::Connected && below(2)) return make(EventKind::Disconnect, {s});
        return make(EventKind::Tick);
      case 1: {
        std::vector<SiteId> crashed;
        for (const auto& t : w_.sites()) {
          if (t.status == Status::Crashed && !recovered_.count(t.id())) crashed.push_back(t.id());
        }
        if (!crashed.empty() && below(2)) {
          const auto dead = pick(crashed);
          recovered_.insert(dead);
          return make(EventKind::Recover, {dead, s});
        }
        if (w_.live().size() > 2 && w_.size() < 2 * opt_.sites) return make(EventKind::Crash, {s});
        return make(EventKind::Tick);
      }
      default:
        if (site.suspected) return make(EventKind::Reconnect, {s});
        if (site.status == Status::Connected) return make(EventKind::Suspect, {s});
        return make(EventKind::Tick);
    }
  }

  World& w_;
  const FuzzOptions& opt_;
  std::mt19937_64 rng_;
  std::set<SiteId> recovered_;
  int since_depth_check_ = 0;
};

}  // namespace

std::vector<Event> fuzz(World& world, const FuzzOptions& opt, const EventObserver& observe) {
  if (world.size() != 0) throw Error(Errc::IllegalEvent, "fuzz needs an empty world");
  if (opt.sites == 0) throw Error(Errc::PreconditionViolated, "fuzz needs at least one site");
  std::vector<Event> trace;
  const std::size_t first_line = 2;  // line 1 of a trace file is its header comment
  auto run = [&](Event e) {
    e.line = first_line + trace.size();
    auto result = world.execute(e);
    trace.push_back(e);
    if (observe) observe(trace.back(), result);
  };

  Event sites;
  sites.kind = EventKind::Sites;
  sites.args = {opt.sites};
  run(sites);

  Generator gen(world, opt);
  std::size_t edits = 0;
  const std::size_t max_steps = 50 * opt.ops + 1000;
  for (std::size_t step = 0; edits < opt.ops && step < max_steps; ++step) {
    Event e = gen.next();
    try {
      e.line = first_line + trace.size();
      auto result = world.execute(e);
      trace.push_back(e);
      if (observe) observe(trace.back(), result);
    } catch (const Error&) {
      continue;
    }
    if (e.kind == EventKind::Insert || e.kind == EventKind::Delete) ++edits;
  }
  Event q;
  q.kind = EventKind::Quiesce;
  run(q);
  Event c;
  c.kind = EventKind::Check;
  run(c);
  return trace;
}

}  // namespace treedoc
