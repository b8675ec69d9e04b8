#include "treedoc/operation.hpp"

#include <charconv>

#include "treedoc/error.hpp"

namespace treedoc {

const char* to_string(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Insert: return "INSERT";
    case OpKind::Delete: return "DELETE";
    case OpKind::NoOp: return "NOOP";
    case OpKind::TxnStart: return "TXN_START";
    case OpKind::TxnEnd: return "TXN_END";
    case OpKind::FlattenPropose: return "FLATTEN_PROPOSE";
    case OpKind::FlattenVote: return "FLATTEN_VOTE";
    case OpKind::FlattenDecide: return "FLATTEN_DECIDE";
  }
  return "?";
}

std::string encode(const OpId& id) { return std::to_string(id.site) + "." + std::to_string(id.seq); }

bool happens_before(const Operation& a, const Operation& b) noexcept {
  return a.id() != b.id() && b.stamp.get(a.site) >= a.seq;
}

bool concurrent(const Operation& a, const Operation& b) noexcept {
  return a.id() != b.id() && !happens_before(a, b) && !happens_before(b, a);
}

std::string encode(const Operation& op) {
  std::string out = std::to_string(op.site) + " " + std::to_string(op.seq) + " " + encode(op.stamp) + " " +
                    to_string(op.kind) + " ";
  switch (op.kind) {
    case OpKind::Insert:
      out += encode(op.pos) + " " + escape_atom(op.atom);
      break;
    case OpKind::Delete:
      out += encode(op.pos);
      break;
    case OpKind::NoOp:
    case OpKind::TxnStart:
    case OpKind::TxnEnd:
      out += "-";
      break;
    case OpKind::FlattenPropose:
      out += encode(op.pos) + " " + encode_atoms(op.content);
      break;
    case OpKind::FlattenVote:
      out += encode(op.pos) + (op.yes ? " yes" : " no") + " ref=" + encode(op.ref);
      break;
    case OpKind::FlattenDecide:
      out += encode(op.pos) + (op.yes ? " commit" : " abort") + " ref=" + encode(op.ref);
      break;
  }
  if (op.tag) out += " tag=" + encode(op.tag->slot) + "@" + encode(op.tag->proposal);
  return out;
}

namespace {

[[noreturn]] void bad_line(std::string_view line, const std::string& why) {
  throw Error(Errc::ParseError, why + " in operation '" + std::string(line) + "'");
}

template <class Int>
Int to_int(std::string_view tok, std::string_view line) {
  Int v{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) bad_line(line, "bad integer '" + std::string(tok) + "'");
  return v;
}

OpId parse_op_id(std::string_view tok, std::string_view line) {
  const auto dot = tok.find('.');
  if (dot == std::string_view::npos) bad_line(line, "bad op id");
  return {to_int<SiteId>(tok.substr(0, dot), line), to_int<std::uint64_t>(tok.substr(dot + 1), line)};
}

OpKind parse_kind(std::string_view tok, std::string_view line) {
  for (auto k : {OpKind::Insert, OpKind::Delete, OpKind::NoOp, OpKind::TxnStart, OpKind::TxnEnd,
                 OpKind::FlattenPropose, OpKind::FlattenVote, OpKind::FlattenDecide}) {
    if (tok == to_string(k)) return k;
  }
  bad_line(line, "unknown kind '" + std::string(tok) + "'");
}

}  // namespace

Operation parse_operation(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    if (i >= line.size()) break;
    const auto j = line.find(' ', i);
    const auto end = j == std::string_view::npos ? line.size() : j;
    toks.push_back(line.substr(i, end - i));
    i = end;
  }
  if (toks.size() < 5) bad_line(line, "too few fields");

  Operation op;
  op.site = to_int<SiteId>(toks[0], line);
  op.seq = to_int<std::uint64_t>(toks[1], line);
  op.stamp = parse_vector_clock(toks[2]);
  op.kind = parse_kind(toks[3], line);

  std::size_t next = 5;
  auto need = [&](std::size_t n) {
    if (toks.size() < n) bad_line(line, "missing field");
  };
  switch (op.kind) {
    case OpKind::Insert:
      need(6);
      op.pos = parse_pos_id(toks[4]);
      op.atom = unescape_atom(toks[5]);
      next = 6;
      break;
    case OpKind::Delete:
      op.pos = parse_pos_id(toks[4]);
      break;
    case OpKind::NoOp:
    case OpKind::TxnStart:
    case OpKind::TxnEnd:
      if (toks[4] != "-") bad_line(line, "expected '-'");
      break;
    case OpKind::FlattenPropose:
      need(6);
      op.pos = parse_pos_id(toks[4]);
      op.content = decode_atoms(toks[5]);
      next = 6;
      break;
    case OpKind::FlattenVote:
    case OpKind::FlattenDecide: {
      need(7);
      op.pos = parse_pos_id(toks[4]);
      const auto verdict = toks[5];
      const bool vote = op.kind == OpKind::FlattenVote;
      if (verdict == (vote ? "yes" : "commit")) {
        op.yes = true;
      } else if (verdict != (vote ? "no" : "abort")) {
        bad_line(line, "bad verdict");
      }
      if (toks[6].substr(0, 4) != "ref=") bad_line(line, "expected ref=");
      op.ref = parse_op_id(toks[6].substr(4), line);
      next = 7;
      break;
    }
  }
  for (; next < toks.size(); ++next) {
    const auto tok = toks[next];
    if (tok.substr(0, 4) != "tag=") bad_line(line, "unexpected field '" + std::string(tok) + "'");
    const auto at = tok.rfind('@');
    if (at == std::string_view::npos) bad_line(line, "bad tag");
    op.tag = FlattenTag{parse_pos_id(tok.substr(4, at - 4)), parse_op_id(tok.substr(at + 1), line)};
  }
  if (op.stamp.get(op.site) != op.seq) bad_line(line, "stamp does not carry own sequence number");
  return op;
}

}  // namespace treedoc
