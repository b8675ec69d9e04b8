// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "treedoc/error.hpp"
#include "treedoc/fuzz.hpp"
#include "treedoc/runner.hpp"
#include "treedoc/sim.hpp"
#include "treedoc/structure.hpp"

using namespace treedoc;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", s);
  return buf;
}

World run_script(const std::string& script) {
  World w;
  for (const auto& e : parse_scenario(script)) w.execute(e);
  return w;
}

// ---------------------------------------------------------------------------

Verdict golden_layouts() {
  Verdict v;
  auto fail = [&](const std::string& what) {
    if (v.ok) v.detail = what;
    v.ok = false;
  };

  // abcdef by editing: c, b, a, e, f, d.
  Treedoc doc;
  std::uint64_t counter = 0;
  auto insert = [&](std::size_t i, const char* a) {
    auto [p, n] = doc.neighbors_for_insert(i);
    doc.insert_atom(a, doc.new_uid(p, n, {++counter, 1}), true);
  };
  insert(0, "c");
  insert(0, "b");
  insert(0, "a");
  insert(3, "e");
  insert(4, "f");
  insert(3, "d");
  const std::vector<std::string> reference{"00", "0", "", "10", "1", "11"};
  std::vector<std::string> got;
  for (const auto& la : doc.live_atoms()) got.push_back(dir_bits(la.id));
  if (doc.render() != "abcdef" || got != reference) fail("abcdef identifiers differ");

  // X between c and d.
  const auto x2 = doc.new_uid(doc.uid_at(2), doc.uid_at(3), {++counter, 1});
  if (dir_bits(x2) != "100") fail("X has id " + dir_bits(x2));

  // Concurrent inserts between c and d over the bare reference identifiers.
  Treedoc bare;
  const char* atoms = "abcdef";
  for (std::size_t i = 0; i < reference.size(); ++i) {
    PosId id;
    for (char c : reference[i]) id.components.push_back({static_cast<std::uint8_t>(c - '0'), std::nullopt});
    bare.insert_atom(std::string(1, atoms[i]), id, false);
  }
  Treedoc other = bare;
  const Disambiguator dx{1, 1}, dy{1, 2};
  const auto x = bare.new_uid(bare.uid_at(2), bare.uid_at(3), dx);
  const auto y = other.new_uid(other.uid_at(2), other.uid_at(3), dy);
  auto expected = [](Disambiguator d) {
    PosId id;
    id.components = {{1, std::nullopt}, {0, std::nullopt}, {0, d}};
    return id;
  };
  if (x != expected(dx) || y != expected(dy)) fail("concurrent ids are " + encode(x) + " and " + encode(y));
  bare.insert_atom("X", x, true);
  other.insert_atom("Y", y, true);
  bare.insert_atom("Y", y, false);
  other.insert_atom("X", x, false);
  if (bare.render() != "abcXYdef" || bare.live_atoms() != other.live_atoms()) fail("concurrent replicas differ");
  if (v.ok) v.detail = "abcdef [00][0][][10][1][11], X [100], concurrent " + encode(x) + " " + encode(y);
  return v;
}

// ---------------------------------------------------------------------------

struct RandomDoc {
  Treedoc doc;
  std::uint64_t counter = 0;
};

// Random replica state with side nodes and nil nodes.
RandomDoc random_state(std::mt19937_64& rng) {
  RandomDoc r;
  const auto steps = 1 + rng() % 40;
  for (std::size_t i = 0; i < steps; ++i) {
    const auto n = r.doc.size();
    if (n > 0 && rng() % 4 == 0) {
      r.doc.delete_atom(r.doc.uid_at(rng() % n), true);
      continue;
    }
    const auto k = rng() % (n + 1);
    auto [p, q] = r.doc.neighbors_for_insert(k);
    if (rng() % 5 == 0) {
      // Two sites insert at the same place concurrently.
      const auto a = r.doc.new_uid(p, q, {++r.counter, 1});
      const auto b = r.doc.new_uid(p, q, {++r.counter, 2});
      r.doc.insert_atom("s", a, false);
      r.doc.insert_atom("t", b, false);
    } else {
      r.doc.insert_atom(std::string(1, static_cast<char>('a' + rng() % 26)),
                        r.doc.new_uid(p, q, {++r.counter, static_cast<SiteId>(1 + rng() % 3)}), false);
    }
  }
  return r;
}

PosId fresh_id(RandomDoc& r, std::mt19937_64& rng, SiteId site) {
  auto [p, q] = r.doc.neighbors_for_insert(rng() % (r.doc.size() + 1));
  return r.doc.new_uid(p, q, {++r.counter, site});
}

using Step = std::function<void(Treedoc&)>;

bool commute(const Treedoc& t, const Step& f, const Step& g) {
  Treedoc fg = t, gf = t;
  f(fg);
  g(fg);
  g(gf);
  f(gf);
  return fg.live_atoms() == gf.live_atoms() && fg.render() == gf.render();
}

Verdict commutativity() {
  std::mt19937_64 rng(2024);
  std::size_t instances = 0, failures = 0, absent = 0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 4000; ++i) {
    // Two fresh inserts.
    {
      auto r = random_state(rng);
      const auto u1 = fresh_id(r, rng, 4);
      const auto u2 = fresh_id(r, rng, 5);
      const bool ok = commute(r.doc, [&](Treedoc& d) { d.insert_atom("X", u1, false); },
                              [&](Treedoc& d) { d.insert_atom("Y", u2, false); });
      failures += !ok;
      ++instances;
    }
    // Insert and delete of different identifiers, target present or absent.
    {
      auto r = random_state(rng);
      const auto u1 = fresh_id(r, rng, 4);
      PosId u2;
      if (r.doc.size() > 0 && rng() % 2 == 0) {
        u2 = r.doc.uid_at(rng() % r.doc.size());
      } else {
        u2 = fresh_id(r, rng, 5);
        ++absent;
      }
      const bool ok = commute(r.doc, [&](Treedoc& d) { d.insert_atom("X", u1, false); },
                              [&](Treedoc& d) { d.delete_atom(u2, false); });
      failures += !ok;
      ++instances;
    }
    // Two deletes.
    {
      auto r = random_state(rng);
      if (r.doc.size() == 0) {
        auto [p, q] = r.doc.neighbors_for_insert(0);
        r.doc.insert_atom("z", r.doc.new_uid(p, q, {++r.counter, 1}), false);
      }
      const auto n = r.doc.size();
      const auto u1 = r.doc.uid_at(rng() % n);
      const auto u2 = r.doc.uid_at(rng() % n);
      const bool ok = commute(r.doc, [&](Treedoc& d) { d.delete_atom(u1, false); },
                              [&](Treedoc& d) { d.delete_atom(u2, false); });
      failures += !ok;
      ++instances;
    }
  }
  const double s = seconds_since(t0);
  return {failures == 0 && instances >= 10000 && s < 60,
          std::to_string(instances) + " instances (" + std::to_string(absent) + " with absent delete target), " +
              std::to_string(failures) + " failures, " + fmt(s)};
}

// ---------------------------------------------------------------------------

Verdict schedules() {
  std::mt19937_64 rng(77);
  std::size_t logs = 0, total = 0, failures = 0;
  const auto t0 = Clock::now();
  while (logs < 600) {
    const std::size_t k = 1 + rng() % 3;
    const std::size_t target = 1 + rng() % 7;
    World w(k);
    std::size_t edits = 0;
    while (edits < target) {
      const auto s = static_cast<SiteId>(rng() % k);
      Site& site = w.site(s);
      const auto roll = rng() % 10;
      if (roll < 3 && k > 1) {
        const auto t = static_cast<SiteId>((s + 1 + rng() % (k - 1)) % k);
        w.exchange(s, t);
      } else if (roll < 5 && site.doc().size() > 0) {
        site.erase(rng() % site.doc().size());
        ++edits;
      } else {
        site.insert(rng() % (site.doc().size() + 1), std::string(1, static_cast<char>('a' + rng() % 26)));
        ++edits;
      }
    }
    const auto report = enumerate_and_check(collect_multilog(w));
    total += report.schedules;
    failures += !report.equivalent;
    ++logs;
  }
  const double s = seconds_since(t0);
  return {failures == 0 && s < 300,
          std::to_string(logs) + " multilogs, " + std::to_string(total) + " schedules, " + std::to_string(failures) +
              " failures, " + fmt(s)};
}

// ---------------------------------------------------------------------------

struct FuzzTally {
  std::size_t runs = 0, failures = 0, render_changes = 0, leftover_leaves = 0, gc_removed = 0, sides_cleaned = 0,
              commits = 0, aborts = 0;
  std::string first_failure;
};

FuzzTally fuzz_sweep() {
  FuzzTally t;
  const char* profiles[] = {"partition", "all", "partition+crash", "partition+suspect"};
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    FuzzOptions opt;
    opt.seed = seed;
    opt.sites = 3 + seed % 4;
    opt.ops = 100 + (seed * 7919) % 401;
    opt.faults = FaultProfile::parse(profiles[seed % 4]);
    World w;
    bool ok = true;
    fuzz(w, opt, [&](const Event& e, const std::optional<CheckResult>& r) {
      if (e.kind == EventKind::Check && r && !r->ok) ok = false;
    });
    for (const auto& s : w.sites()) {
      t.render_changes += s.counters().compaction_render_changes;
      if (s.status == Status::Crashed) continue;
      t.leftover_leaves += s.doc().nil_leaves().size();
    }
    const auto m = w.metrics();
    t.gc_removed += m.gc_removed;
    t.sides_cleaned += m.sides_cleaned;
    t.commits += m.flatten_commits;
    t.aborts += m.flatten_aborts;
    ++t.runs;
    if (!ok) {
      ++t.failures;
      if (t.first_failure.empty()) {
        t.first_failure = "seed " + std::to_string(seed) + " sites " + std::to_string(opt.sites) + " ops " +
                          std::to_string(opt.ops) + " faults " + opt.faults.name();
      }
    }
  }
  return t;
}

// ---------------------------------------------------------------------------

Verdict explode_flatten() {
  std::size_t failures = 0;
  for (std::size_t n = 0; n <= 1024; ++n) {
    AtomString s;
    for (std::size_t i = 0; i < n; ++i) s.atoms.push_back(std::string(1, static_cast<char>('!' + i % 90)));
    const auto doc = explode(s);
    const auto expected_depth = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n) + 1.0)));
    if (flatten_local(doc, PosId{}).atoms != s.atoms || doc.stats().max_depth != expected_depth) ++failures;
  }
  return {failures == 0, "lengths 0..1024, " + std::to_string(failures) + " failures"};
}

// ---------------------------------------------------------------------------

bool all_decided(const World& w, bool commit) {
  for (const auto& s : w.sites()) {
    if (s.proposals().empty()) return false;
    for (const auto& [ref, st] : s.proposals()) {
      if (st.committed != commit) return false;
    }
  }
  return true;
}

Verdict flatten_commitment() {
  Verdict v;
  auto concurrent = run_script(R"(
sites 3
type 0 0 abcdefghij
sync
flatten 0 []
insert 2 5 X
sync
quiesce
)");
  const bool aborted = all_decided(concurrent, false);
  bool edit_kept = true;
  for (const auto& s : concurrent.sites()) edit_kept = edit_kept && s.doc().render() == "abcdeXfghij";
  const bool conv = concurrent.check().ok;

  std::string chain = "sites 3\n";
  for (int i = 0; i < 20; ++i) chain += "insert 1 " + std::to_string(i) + " " + std::string(1, char('a' + i)) + "\n";
  chain += "sync\n";
  auto quiet = run_script(chain);
  const auto before_render = quiet.site(0).doc().render();
  const auto before_depth = quiet.metrics().max_depth;
  quiet.execute(parse_event("flatten 2 []", 1));
  quiet.sync();
  const bool committed = all_decided(quiet, true);
  bool same = true;
  for (const auto& s : quiet.sites()) same = same && s.doc().render() == before_render;
  const auto after_depth = quiet.metrics().max_depth;
  const bool bounded = after_depth == static_cast<std::size_t>(canonical_height(before_render.size()));

  v.ok = aborted && edit_kept && conv && committed && same && bounded;
  v.detail = std::string("concurrent: ") + (aborted ? "aborted everywhere" : "NOT aborted everywhere") +
             (edit_kept ? ", edit kept" : ", edit missing") + "; quiescent: " +
             (committed ? "committed everywhere" : "NOT committed everywhere") + ", depth " +
             std::to_string(before_depth) + " -> " + std::to_string(after_depth) +
             (same ? ", rendering unchanged" : ", rendering changed");
  return v;
}

Verdict disconnection() {
  auto w = run_script(R"(
sites 4
type 0 0 stable
sync
disconnect 3
insert 3 0 >
flatten 1 []
sync
)");
  // The disconnected site learns the outcome only after reconnecting.
  bool any_commit = false;
  for (const auto& s : w.sites()) {
    for (const auto& [ref, st] : s.proposals()) any_commit = any_commit || st.committed == true;
  }
  const bool aborted = !any_commit && w.metrics().flatten_aborts == 1;
  w.execute(parse_event("reconnect 3", 1));
  w.sync();
  const bool decided = all_decided(w, false);
  w.quiesce();
  const auto r = w.check();
  const bool converged = r.ok && w.site(0).doc().render() == ">stable";
  return {aborted && decided && converged,
          std::string(aborted ? "aborted" : "NOT aborted") + ", " + (decided ? "all sites learned abort" : "undecided") +
              ", " + (converged ? "converged to '>stable'" : "diverged: " + r.witness)};
}

// ---------------------------------------------------------------------------

Verdict gc_neutrality(const FuzzTally& t) {
  // A quiescent world with stably deleted leaf subtrees: everything goes.
  auto w = run_script("sites 3\ntype 0 0 abcdefghijklmnop\nsync\n");
  std::mt19937_64 rng(9);
  for (int i = 0; i < 12; ++i) {
    const auto s = static_cast<SiteId>(rng() % 3);
    w.site(s).erase(rng() % w.site(s).doc().size());
    w.sync();
  }
  w.quiesce();
  std::size_t leftover = 0;
  for (const auto& s : w.sites()) leftover += s.doc().nil_leaves().size() + s.doc().dead_nodes();
  const bool ok = t.render_changes == 0 && t.leftover_leaves == 0 && leftover == 0 && t.gc_removed > 0;
  return {ok, std::to_string(t.render_changes) + " rendering changes over " + std::to_string(t.runs) + " runs (" +
                  std::to_string(t.gc_removed) + " gc, " + std::to_string(t.sides_cleaned) + " cleanSide), " +
                  std::to_string(t.leftover_leaves + leftover) + " stably deleted leaves left after quiescence"};
}

// ---------------------------------------------------------------------------

// Feeds `from`'s missing operations to `to` one at a time; every snapshot must
// be the state before the transaction or the state after it.
bool feed_one_by_one(World& w, SiteId from, SiteId to, std::size_t& snapshots) {
  Site& dst = w.site(to);
  const auto ops = w.site(from).ops_missing_at(dst.vc());
  const auto before = dst.doc().render();
  std::vector<std::string> seen;
  for (const auto& op : ops) {
    dst.receive({op});
    dst.poll();
    seen.push_back(dst.doc().render());
    ++snapshots;
  }
  const auto after = dst.doc().render();
  for (const auto& s : seen) {
    if (s != before && s != after) return false;
  }
  return true;
}

std::string random_txn(std::mt19937_64& rng, SiteId s, std::size_t len) {
  std::string out = "txn-begin " + std::to_string(s) + "\n";
  for (int i = 0; i < 10; ++i) {
    if (len > 2 && rng() % 3 == 0) {
      out += "delete " + std::to_string(s) + " " + std::to_string(rng() % len) + "\n";
      --len;
    } else {
      out += "insert " + std::to_string(s) + " " + std::to_string(rng() % (len + 1)) + " " +
             std::string(1, static_cast<char>('A' + rng() % 26)) + "\n";
      ++len;
    }
  }
  return out + "txn-end " + std::to_string(s) + "\n";
}

Verdict transactions() {
  std::mt19937_64 rng(31);
  std::size_t trials = 0, order_failures = 0, partial = 0, snapshots = 0;
  for (int i = 0; i < 300; ++i) {
    const std::string base = "sites 3\ntype 0 0 0123456789\nsync\n";
    auto w = run_script(base + random_txn(rng, 1, 10) + random_txn(rng, 2, 10));
    World first = w, second = w;
    partial += !feed_one_by_one(first, 1, 0, snapshots);
    partial += !feed_one_by_one(first, 2, 0, snapshots);
    partial += !feed_one_by_one(second, 2, 0, snapshots);
    partial += !feed_one_by_one(second, 1, 0, snapshots);
    partial += !feed_one_by_one(first, 2, 1, snapshots);
    partial += !feed_one_by_one(second, 1, 2, snapshots);
    if (first.site(0).doc().live_atoms() != second.site(0).doc().live_atoms() ||
        first.site(0).doc().live_atoms() != first.site(1).doc().live_atoms() ||
        second.site(0).doc().live_atoms() != second.site(2).doc().live_atoms()) {
      ++order_failures;
    }
    ++trials;
  }
  return {order_failures == 0 && partial == 0,
          std::to_string(trials) + " pairs of concurrent 10-op transactions, " + std::to_string(order_failures) +
              " order mismatches, " + std::to_string(partial) + " partial views in " + std::to_string(snapshots) +
              " snapshots"};
}

// ---------------------------------------------------------------------------

Verdict determinism() {
  std::size_t mismatches = 0, runs = 0;
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    FuzzOptions opt;
    opt.seed = seed;
    opt.sites = 3 + seed % 4;
    opt.ops = 100 + seed % 200;
    opt.faults = FaultProfile::parse("all");
    const auto a = run_fuzz(opt, {true});
    const auto b = run_fuzz(opt, {true});
    if (a.report != b.report || trace_text(a) != trace_text(b)) ++mismatches;
    // Replaying the recorded trace as a scenario reaches the same summary.
    const auto replay = run_scenario(trace_text(a), {true});
    if (replay.report.back() != a.report.back()) ++mismatches;
    ++runs;
  }
  return {mismatches == 0, std::to_string(runs) + " seeds run twice and replayed, " + std::to_string(mismatches) +
                               " mismatches"};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int n, const char* name, const Verdict& v) {
    std::printf("%s %2d %-28s %s\n", v.ok ? "PASS" : "FAIL", n, name, v.detail.c_str());
    std::fflush(stdout);
    failed += !v.ok;
  };
  auto timed = [](auto&& f, double limit) {
    const auto t0 = Clock::now();
    Verdict v = f();
    const double s = seconds_since(t0);
    if (s >= limit) v.ok = false;
    v.detail += " [" + fmt(s) + "]";
    return v;
  };

  report(1, "golden layouts", timed(golden_layouts, 1.0));
  report(2, "commutativity", commutativity());
  report(3, "schedule equivalence", schedules());

  const auto t0 = Clock::now();
  const auto tally = fuzz_sweep();
  const double fuzz_s = seconds_since(t0);
  report(4, "eventual consistency",
         {tally.failures == 0 && tally.runs >= 1000,
          std::to_string(tally.runs) + " runs, " + std::to_string(tally.failures) + " diverged" +
              (tally.first_failure.empty() ? "" : " (first: " + tally.first_failure + ")") + ", flattens " +
              std::to_string(tally.commits) + " committed / " + std::to_string(tally.aborts) + " aborted, " +
              fmt(fuzz_s)});

  report(5, "explode/flatten", explode_flatten());
  report(6, "flatten commitment", flatten_commitment());
  report(7, "disconnection rule", disconnection());
  report(8, "gc/cleanSide neutrality", gc_neutrality(tally));
  report(9, "transactions", transactions());
  report(10, "determinism", determinism());
  std::printf("%d of 10 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
