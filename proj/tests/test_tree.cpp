#include <algorithm>
#include <random>

#include "doctest.h"
#include "treedoc/error.hpp"
#include "treedoc/tree.hpp"

using namespace treedoc;

namespace {

PosId P(std::string_view s) { return parse_pos_id(s); }

struct Editor {
  Treedoc doc;
  SiteId site = 1;
  std::uint64_t counter = 0;

  PosId insert(std::size_t index, const Atom& a) {
    auto [prev, next] = doc.neighbors_for_insert(index);
    const auto id = doc.new_uid(prev, next, Disambiguator{++counter, site});
    doc.insert_atom(a, id, true);
    return id;
  }
};

// "abcdef" built by inserting c, b, a, e, f, d.
Editor abcdef_doc() {
  Editor e;
  e.insert(0, "c");
  e.insert(0, "b");
  e.insert(0, "a");
  e.insert(3, "e");
  e.insert(4, "f");
  e.insert(3, "d");
  return e;
}

std::vector<std::string> bits(const Treedoc& d) {
  std::vector<std::string> out;
  for (const auto& la : d.live_atoms()) out.push_back(dir_bits(la.id));
  return out;
}

}  // namespace

TEST_CASE("abcdef reference identifiers") {
  auto e = abcdef_doc();
  CHECK(e.doc.render() == "abcdef");
  CHECK(bits(e.doc) == std::vector<std::string>{"00", "0", "", "10", "1", "11"});
  CHECK(dir_bits(e.doc.uid_at(3)) == "10");
}

TEST_CASE("insert between c and d") {
  auto e = abcdef_doc();
  const auto c = e.doc.uid_at(2), d = e.doc.uid_at(3);
  const auto x = e.doc.new_uid(c, d, {99, 1});
  CHECK(dir_bits(x) == "100");
  CHECK(x == d.child(0, Disambiguator{99, 1}));
  e.doc.insert_atom("X", x, true);
  CHECK(e.doc.render() == "abcXdef");
  CHECK(e.doc.uid_at(3) == x);
}

TEST_CASE("concurrent inserts at one position become side nodes") {
  auto a = abcdef_doc();
  Treedoc b = a.doc;
  const auto c = a.doc.uid_at(2), d = a.doc.uid_at(3);
  const auto x = a.doc.new_uid(c, d, {7, 1});
  const auto y = b.new_uid(c, d, {7, 2});
  CHECK(dir_bits(x) == dir_bits(y));
  CHECK(x.last_key() == Disambiguator{7, 1});
  CHECK(y.last_key() == Disambiguator{7, 2});
  a.doc.insert_atom("X", x, true);
  b.insert_atom("Y", y, true);
  a.doc.insert_atom("Y", y, false);
  b.insert_atom("X", x, false);
  CHECK(a.doc.render() == "abcXYdef");
  CHECK(b.render() == "abcXYdef");
  CHECK(a.doc.live_atoms() == b.live_atoms());
  auto r = a.doc.resolve(x);
  REQUIRE(r);
  CHECK(r->atom == Atom("X"));
}

TEST_CASE("new_uid hand traces") {
  Treedoc empty;
  const auto root = empty.new_uid(std::nullopt, std::nullopt, {1, 4});
  CHECK(root.is_root());
  CHECK(root.root == Disambiguator{1, 4});

  auto e = abcdef_doc();
  const auto b = e.doc.uid_at(1), c = e.doc.uid_at(2), f = e.doc.uid_at(5);
  CHECK(dir_bits(e.doc.new_uid(b, c, {50, 1})) == "01");
  const auto after_f = e.doc.new_uid(f, std::nullopt, {51, 1});
  CHECK(dir_bits(after_f) == "111");
  for (const auto& la : e.doc.live_atoms()) CHECK(compare(la.id, after_f) < 0);
  CHECK(dir_bits(e.doc.new_uid(std::nullopt, e.doc.uid_at(0), {52, 1})) == "000");
  CHECK_THROWS_AS(e.doc.new_uid(c, b, {53, 1}), Error);
  CHECK_THROWS_AS(e.doc.new_uid(c, c, {53, 1}), Error);
}

TEST_CASE("sandwich property over random editing") {
  std::mt19937_64 rng(21);
  for (int run = 0; run < 40; ++run) {
    Editor e;
    std::string mirror;
    for (int i = 0; i < 120; ++i) {
      if (!mirror.empty() && rng() % 4 == 0) {
        const auto k = rng() % mirror.size();
        e.doc.delete_atom(e.doc.uid_at(k), true);
        mirror.erase(k, 1);
        continue;
      }
      const auto k = rng() % (mirror.size() + 1);
      auto [prev, next] = e.doc.neighbors_for_insert(k);
      const auto id = e.doc.new_uid(prev, next, {++e.counter, 1});
      if (prev) CHECK(compare(*prev, id) < 0);
      if (next) CHECK(compare(id, *next) < 0);
      CHECK_FALSE(e.doc.has_entry(id));
      const char ch = static_cast<char>('a' + rng() % 26);
      e.doc.insert_atom(Atom(1, ch), id, true);
      mirror.insert(mirror.begin() + static_cast<std::ptrdiff_t>(k), ch);
    }
    CHECK(e.doc.render() == mirror);
    auto live = e.doc.live_atoms();
    CHECK(std::is_sorted(live.begin(), live.end(), [](auto& x, auto& y) { return x.id < y.id; }));
  }
}

TEST_CASE("delete") {
  auto e = abcdef_doc();
  const auto d = e.doc.uid_at(3);
  e.doc.delete_atom(d, true);
  CHECK(e.doc.render() == "abcef");
  e.doc.delete_atom(d, false);
  CHECK(e.doc.render() == "abcef");
  CHECK_THROWS_AS(e.doc.delete_atom(d, true), Error);
}

TEST_CASE("concurrent deletes commute") {
  auto e = abcdef_doc();
  const auto b = e.doc.uid_at(1), ee = e.doc.uid_at(4);
  Treedoc one = e.doc, two = e.doc;
  one.delete_atom(b, false);
  one.delete_atom(ee, false);
  two.delete_atom(ee, false);
  two.delete_atom(b, false);
  CHECK(one.render() == "acdf");
  CHECK(one.live_atoms() == two.live_atoms());
}

TEST_CASE("index plumbing") {
  Treedoc empty;
  auto [p, n] = empty.neighbors_for_insert(0);
  CHECK_FALSE(p);
  CHECK_FALSE(n);
  CHECK_THROWS_AS(empty.uid_at(0), Error);
  CHECK_THROWS_AS(empty.neighbors_for_insert(1), Error);
  auto e = abcdef_doc();
  auto [p2, n2] = e.doc.neighbors_for_insert(6);
  CHECK(p2 == e.doc.uid_at(5));
  CHECK_FALSE(n2);
}

TEST_CASE("replay creates missing ancestors as nil nodes") {
  auto e = abcdef_doc();
  Treedoc other = e.doc;
  const auto y = other.new_uid(e.doc.uid_at(2), e.doc.uid_at(3), {9, 2});
  // A deep identifier under an absent branch.
  const auto deep = P("[11(1,1)1(2,2)0(3,2)]");
  Treedoc fresh;
  fresh.insert_atom("Z", deep, false);
  CHECK(fresh.render() == "Z");
  CHECK(fresh.stats().nil_nodes == 4);
  e.doc.insert_atom("Y", y, false);
  CHECK(e.doc.render() == "abcYdef");
  CHECK_THROWS_AS(fresh.insert_atom("Q", P("[00(1,1)]"), true), Error);
}

TEST_CASE("initiator preconditions") {
  auto e = abcdef_doc();
  const auto d = e.doc.uid_at(3);
  CHECK_THROWS_AS(e.doc.insert_atom("Q", d, true), Error);
  CHECK_THROWS_AS(e.doc.insert_atom("Q", P("[0101(1,1)]"), true), Error);
  CHECK_THROWS_AS(e.doc.delete_atom(P("[0101(1,1)]"), true), Error);
}

TEST_CASE("gc removes nil leaves without changing rendering") {
  auto e = abcdef_doc();
  const auto ee = e.doc.uid_at(4), f = e.doc.uid_at(5), d = e.doc.uid_at(3);
  e.doc.delete_atom(f, true, OpId{1, 100});
  CHECK_THROWS_AS(e.doc.gc(ee), Error);  // still holds an atom
  e.doc.gc(f);
  CHECK_FALSE(e.doc.has_entry(f));
  e.doc.delete_atom(ee, true);
  CHECK_THROWS_AS(e.doc.gc(ee), Error);  // d is still a child
  e.doc.delete_atom(d, true);
  e.doc.gc(d);
  e.doc.gc(ee);
  CHECK(e.doc.render() == "abc");
  CHECK(e.doc.nil_leaves().empty());
  CHECK(e.doc.materialized_nodes() == 3);
}

TEST_CASE("clean_side promotes a lone side node") {
  auto e = abcdef_doc();
  const auto x = e.doc.new_uid(e.doc.uid_at(2), e.doc.uid_at(3), {8, 1});
  e.doc.insert_atom("X", x, true);
  CHECK(std::find(e.doc.lone_sides().begin(), e.doc.lone_sides().end(), x) != e.doc.lone_sides().end());
  const auto before = e.doc.render();
  CHECK(e.doc.clean_side(x));
  CHECK(e.doc.render() == before);
  CHECK(e.doc.root_slot().main == nullptr);  // the first insert made the root a side node
  auto r = e.doc.resolve(x);
  REQUIRE(r);
  CHECK(r->atom == Atom("X"));
  CHECK(r->id == x);
  // Replay of a delete naming the old identifier still reaches X.
  e.doc.delete_atom(x, false);
  CHECK(e.doc.render() == "abcdef");
  CHECK(e.doc.live_atoms().size() == 6);
}

TEST_CASE("clean_side leaves two side nodes alone") {
  auto e = abcdef_doc();
  const auto c = e.doc.uid_at(2), d = e.doc.uid_at(3);
  const auto x = e.doc.new_uid(c, d, {8, 1});
  const auto y = e.doc.new_uid(c, d, {8, 2});
  e.doc.insert_atom("X", x, true);
  e.doc.insert_atom("Y", y, false);
  CHECK_FALSE(e.doc.clean_side(x));
  CHECK(e.doc.render() == "abcXYdef");
}

TEST_CASE("promoted node resolves and orders with its key") {
  auto e = abcdef_doc();
  for (const auto& id : e.doc.lone_sides()) e.doc.clean_side(id);
  CHECK(e.doc.lone_sides().empty());
  CHECK(e.doc.render() == "abcdef");
  // New inserts still land in order next to promoted nodes.
  auto [p, n] = e.doc.neighbors_for_insert(3);
  const auto x = e.doc.new_uid(p, n, {40, 2});
  e.doc.insert_atom("X", x, true);
  CHECK(e.doc.render() == "abcXdef");
  // A bare-keyed replay into a promoted slot demotes the promoted node.
  const auto c_id = e.doc.uid_at(2);
  e.doc.insert_atom("Z", PosId{}, false);
  CHECK(e.doc.render() == "ZabcXdef");
  CHECK(e.doc.uid_at(3) == c_id);
  CHECK(e.doc.root_slot().main != nullptr);
  CHECK(e.doc.root_slot().sides.size() == 1);
}

TEST_CASE("flat runs: canonical layout of abcde") {
  Treedoc d;
  d.commit_flatten(PosId{}, atoms_of("abcde"), OpId{1, 1});
  CHECK(d.render() == "abcde");
  CHECK(d.materialized_nodes() == 0);
  std::vector<std::string> got;
  for (const auto& la : d.live_atoms()) got.push_back(encode(la.id));
  CHECK(got == std::vector<std::string>{"[00]", "[0]", "[01]", "[]", "[10]"});
  d.expand_all();
  CHECK(d.has_entry(P("[1]")));
  CHECK_FALSE(d.resolve(P("[1]"))->atom);
  CHECK_FALSE(d.has_entry(P("[11]")));
  CHECK(d.stats().nil_nodes == 1);
}

TEST_CASE("flat run materializes only along the resolved path") {
  Treedoc d;
  d.commit_flatten(PosId{}, atoms_of("abcdefghijklmno"), OpId{1, 1});
  auto [p, n] = d.neighbors_for_insert(5);
  const auto x = d.new_uid(p, n, {2, 2});
  d.insert_atom("X", x, true);
  CHECK(d.render() == "abcdeXfghijklmno");
  CHECK(d.materialized_nodes() <= 6);
  CHECK(d.stats().max_depth <= 5);
}

TEST_CASE("flatten tag tracks the innermost committed flatten") {
  Treedoc d;
  d.commit_flatten(PosId{}, atoms_of("abc"), OpId{1, 5});
  auto t = d.flatten_tag(P("[0]"));
  REQUIRE(t);
  CHECK(t->proposal == OpId{1, 5});
  d.commit_flatten(P("[1]"), atoms_of("xyz"), OpId{2, 3});
  CHECK(d.render() == "abxyz");
  CHECK(d.flatten_tag(P("[10]"))->proposal == OpId{2, 3});
  CHECK(d.flatten_tag(P("[0]"))->proposal == OpId{1, 5});
  d.commit_flatten(PosId{}, d.contents(), OpId{3, 1});
  CHECK(d.flatten_marks().size() == 1);
  CHECK(d.render() == "abxyz");
}

TEST_CASE("slot_contents") {
  auto e = abcdef_doc();
  CHECK(join(*e.doc.slot_contents(PosId{})) == "abcdef");
  CHECK(join(*e.doc.slot_contents(P("[-(1,1)1]"))) == "def");
  CHECK_FALSE(e.doc.slot_contents(P("[-(1,1)11(5,1)0]")).has_value());
}

TEST_CASE("canonical height") {
  CHECK(canonical_height(0) == 0);
  CHECK(canonical_height(1) == 1);
  CHECK(canonical_height(3) == 2);
  CHECK(canonical_height(4) == 3);
  CHECK(canonical_height(1024) == 11);
}
