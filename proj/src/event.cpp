#include "treedoc/event.hpp"

#include <array>
#include <charconv>
#include <sstream>

#include "treedoc/error.hpp"

namespace treedoc {

namespace {

struct Syntax {
  EventKind kind;
  const char* name;
};

constexpr std::array<Syntax, 24> kSyntax{{
    {EventKind::Sites, "sites"},
    {EventKind::Insert, "insert"},
    {EventKind::Type, "type"},
    {EventKind::Delete, "delete"},
    {EventKind::Exchange, "exchange"},
    {EventKind::Sync, "sync"},
    {EventKind::Disconnect, "disconnect"},
    {EventKind::Reconnect, "reconnect"},
    {EventKind::Crash, "crash"},
    {EventKind::Recover, "recover"},
    {EventKind::Suspect, "suspect"},
    {EventKind::Flatten, "flatten"},
    {EventKind::TxnBegin, "txn-begin"},
    {EventKind::TxnEnd, "txn-end"},
    {EventKind::Compact, "compact"},
    {EventKind::Heartbeat, "heartbeat"},
    {EventKind::Tick, "tick"},
    {EventKind::Quiesce, "quiesce"},
    {EventKind::Drop, "drop"},
    {EventKind::Check, "check"},
    {EventKind::Expect, "expect"},
    {EventKind::ExpectId, "expect-id"},
    {EventKind::ExpectDepth, "expect-depth"},
    {EventKind::ExpectFlattens, "expect-flattens"},
}};

const char* name_of(EventKind k) {
  for (const auto& s : kSyntax) {
    if (s.kind == k) return s.name;
  }
  return "?";
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    auto j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::string format_event(const Event& e) {
  std::ostringstream out;
  if (e.expect_failure) out << '!';
  out << name_of(e.kind);
  switch (e.kind) {
    case EventKind::Recover:
      out << ' ' << e.args.at(0) << " from " << e.args.at(1);
      break;
    case EventKind::Flatten:
      out << ' ' << e.args.at(0) << ' ' << encode(e.pos);
      break;
    case EventKind::ExpectId:
      out << ' ' << e.args.at(0) << ' ' << e.args.at(1) << ' ' << encode(e.pos);
      break;
    default:
      for (auto a : e.args) out << ' ' << a;
      if (e.kind == EventKind::Insert || e.kind == EventKind::Type || e.kind == EventKind::Expect) {
        out << ' ' << (e.text.empty() ? std::string("-") : e.text);
      }
  }
  return out.str();
}

Event parse_event(std::string_view raw, std::size_t line_no) {
  auto fail = [&](const std::string& why) -> Event {
    throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": " + why);
  };
  Event e;
  e.line = line_no;
  auto toks = split(raw);
  if (toks.empty()) return fail("empty event");
  std::string_view head = toks[0];
  if (head.size() > 1 && head[0] == '!') {
    e.expect_failure = true;
    head.remove_prefix(1);
  }
  bool known = false;
  for (const auto& s : kSyntax) {
    if (head == s.name) {
      e.kind = s.kind;
      known = true;
    }
  }
  if (!known) return fail("unknown event '" + std::string(head) + "'");

  auto num = [&](std::size_t i) -> std::uint64_t {
    if (i >= toks.size()) fail("missing argument");
    std::uint64_t v = 0;
    const auto t = toks[i];
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size()) fail("expected a number, got '" + std::string(t) + "'");
    return v;
  };
  auto arity = [&](std::size_t n) {
    if (toks.size() != n + 1) fail(std::string(head) + " takes " + std::to_string(n) + " argument(s)");
  };
  auto pos = [&](std::size_t i) {
    try {
      return parse_pos_id(toks.at(i));
    } catch (const std::exception& ex) {
      fail(ex.what());
    }
    return PosId{};
  };

  switch (e.kind) {
    case EventKind::Sync:
    case EventKind::Tick:
    case EventKind::Quiesce:
    case EventKind::Check:
      arity(0);
      break;
    case EventKind::Sites:
    case EventKind::Delete:
    case EventKind::Disconnect:
    case EventKind::Reconnect:
    case EventKind::Crash:
    case EventKind::Suspect:
    case EventKind::TxnBegin:
    case EventKind::TxnEnd:
    case EventKind::Compact:
    case EventKind::Heartbeat:
    case EventKind::Drop: {
      const std::size_t n = e.kind == EventKind::Delete ? 2 : 1;
      arity(n);
      for (std::size_t i = 1; i <= n; ++i) e.args.push_back(num(i));
      break;
    }
    case EventKind::Exchange:
    case EventKind::ExpectDepth:
    case EventKind::ExpectFlattens:
      arity(2);
      e.args = {num(1), num(2)};
      break;
    case EventKind::Insert:
    case EventKind::Type:
      arity(3);
      e.args = {num(1), num(2)};
      e.text = std::string(toks[3]);
      break;
    case EventKind::Expect:
      arity(2);
      e.args = {num(1)};
      e.text = toks[2] == "-" ? std::string() : std::string(toks[2]);
      break;
    case EventKind::Recover:
      arity(3);
      if (toks[2] != "from") fail("expected 'recover S from D'");
      e.args = {num(1), num(3)};
      break;
    case EventKind::Flatten:
      arity(2);
      e.args = {num(1)};
      e.pos = pos(2);
      break;
    case EventKind::ExpectId:
      arity(3);
      e.args = {num(1), num(2)};
      e.pos = pos(3);
      break;
  }
  return e;
}

std::vector<Event> parse_scenario(std::string_view text) {
  std::vector<Event> out;
  std::size_t line_no = 0;
  std::size_t i = 0;
  while (i <= text.size()) {
    auto j = text.find('\n', i);
    if (j == std::string_view::npos) j = text.size();
    auto line = text.substr(i, j - i);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (!split(line).empty()) out.push_back(parse_event(line, line_no));
    i = j + 1;
  }
  return out;
}

}  // namespace treedoc
