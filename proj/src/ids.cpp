#include "treedoc/ids.hpp"

#include <charconv>

#include "treedoc/error.hpp"

namespace treedoc {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::PreconditionViolated: return "PreconditionViolated";
    case Errc::InitiatorPreconditionViolated: return "InitiatorPreconditionViolated";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::UnresolvedPath: return "UnresolvedPath";
    case Errc::StaleProposal: return "StaleProposal";
    case Errc::IllegalNesting: return "IllegalNesting";
    case Errc::NoOpenTransaction: return "NoOpenTransaction";
    case Errc::IllegalEvent: return "IllegalEvent";
    case Errc::SubtreeLocked: return "SubtreeLocked";
    case Errc::BoundExceeded: return "BoundExceeded";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

namespace {

// Bare sorts before every disambiguator.
std::strong_ordering compare_keys(const SlotKey& a, const SlotKey& b) noexcept {
  if (!a && !b) return std::strong_ordering::equal;
  if (!a) return std::strong_ordering::less;
  if (!b) return std::strong_ordering::greater;
  return *a <=> *b;
}

}  // namespace

std::strong_ordering compare(const PosId& a, const PosId& b) noexcept {
  if (auto c = compare_keys(a.root, b.root); c != 0) return c;
  const auto n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ca = a.components[i];
    const auto& cb = b.components[i];
    if (ca.dir != cb.dir) return ca.dir <=> cb.dir;
    if (auto c = compare_keys(ca.disamb, cb.disamb); c != 0) return c;
  }
  if (a.size() == b.size()) return std::strong_ordering::equal;
  // One is a prefix of the other: the next step of the longer one decides.
  if (a.size() > b.size()) {
    return a.components[n].dir == 0 ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  return b.components[n].dir == 0 ? std::strong_ordering::greater : std::strong_ordering::less;
}

bool is_ancestor(const PosId& u, const PosId& v) noexcept {
  if (u.size() >= v.size() || u.root != v.root) return false;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u.components[i] == v.components[i])) return false;
  }
  return true;
}

std::optional<PosId> parent(const PosId& v) {
  if (v.is_root()) return std::nullopt;
  PosId p = v;
  p.components.pop_back();
  return p;
}

std::string dir_bits(const PosId& id) {
  std::string out;
  out.reserve(id.size());
  for (const auto& c : id.components) out.push_back(c.dir ? '1' : '0');
  return out;
}

std::string encode(const Disambiguator& d) {
  return "(" + std::to_string(d.counter) + "," + std::to_string(d.site) + ")";
}

std::string encode(const PosId& id) {
  std::string out = "[";
  if (id.root) out += "-" + encode(*id.root);
  for (const auto& c : id.components) {
    out.push_back(c.dir ? '1' : '0');
    if (c.disamb) out += encode(*c.disamb);
  }
  out.push_back(']');
  return out;
}

namespace {

[[noreturn]] void bad(std::string_view text, const char* why) {
  throw Error(Errc::ParseError, std::string(why) + " in position id '" + std::string(text) + "'");
}

template <class Int>
Int read_int(std::string_view text, std::size_t& pos) {
  Int value{};
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), value);
  if (ec != std::errc{}) bad(text, "expected integer");
  pos = static_cast<std::size_t>(ptr - text.data());
  return value;
}

Disambiguator read_disamb(std::string_view text, std::size_t& pos) {
  if (pos >= text.size() || text[pos] != '(') bad(text, "expected '('");
  ++pos;
  Disambiguator d;
  d.counter = read_int<std::uint64_t>(text, pos);
  if (pos >= text.size() || text[pos] != ',') bad(text, "expected ','");
  ++pos;
  d.site = read_int<SiteId>(text, pos);
  if (pos >= text.size() || text[pos] != ')') bad(text, "expected ')'");
  ++pos;
  return d;
}

}  // namespace

PosId parse_pos_id(std::string_view text, std::size_t& pos) {
  if (pos >= text.size() || text[pos] != '[') bad(text, "expected '['");
  ++pos;
  PosId id;
  if (pos < text.size() && text[pos] == '-') {
    ++pos;
    id.root = read_disamb(text, pos);
  }
  while (pos < text.size() && text[pos] != ']') {
    const char c = text[pos++];
    if (c != '0' && c != '1') bad(text, "expected direction bit");
    PathComponent comp{static_cast<std::uint8_t>(c - '0'), std::nullopt};
    if (pos < text.size() && text[pos] == '(') comp.disamb = read_disamb(text, pos);
    id.components.push_back(comp);
  }
  if (pos >= text.size()) bad(text, "missing ']'");
  ++pos;
  return id;
}

PosId parse_pos_id(std::string_view text) {
  std::size_t pos = 0;
  PosId id = parse_pos_id(text, pos);
  if (pos != text.size()) bad(text, "trailing characters");
  return id;
}

}  // namespace treedoc
