#include "treedoc/atom.hpp"

#include <charconv>

#include "treedoc/error.hpp"

namespace treedoc {

namespace {

bool needs_escape(unsigned char c) { return c <= 0x20 || c >= 0x7f || c == '%' || c == ','; }

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

std::string escape_atom(std::string_view atom) {
  static constexpr char digits[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(atom.size());
  for (char ch : atom) {
    const auto c = static_cast<unsigned char>(ch);
    if (needs_escape(c)) {
      out.push_back('%');
      out.push_back(digits[c >> 4]);
      out.push_back(digits[c & 0xF]);
    } else {
      out.push_back(ch);
    }
  }
  return out;
}

std::string unescape_atom(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  for (std::size_t i = 0; i < token.size(); ++i) {
    if (token[i] != '%') {
      out.push_back(token[i]);
      continue;
    }
    if (i + 2 >= token.size()) {
      throw Error(Errc::ParseError, "truncated escape in atom '" + std::string(token) + "'");
    }
    const int hi = hex_value(token[i + 1]);
    const int lo = hex_value(token[i + 2]);
    if (hi < 0 || lo < 0) throw Error(Errc::ParseError, "bad escape in atom '" + std::string(token) + "'");
    out.push_back(static_cast<char>(hi * 16 + lo));
    i += 2;
  }
  return out;
}

std::string encode_atoms(const std::vector<Atom>& atoms) {
  std::string out = std::to_string(atoms.size()) + ":";
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i) out.push_back(',');
    out += escape_atom(atoms[i]);
  }
  return out;
}

std::vector<Atom> decode_atoms(std::string_view token) {
  const auto colon = token.find(':');
  if (colon == std::string_view::npos) throw Error(Errc::ParseError, "atom list lacks count");
  std::size_t count = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + colon, count);
  if (ec != std::errc{} || ptr != token.data() + colon) throw Error(Errc::ParseError, "bad atom count");
  std::vector<Atom> atoms;
  atoms.reserve(count);
  std::string_view rest = token.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    atoms.push_back(unescape_atom(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (atoms.size() != count) throw Error(Errc::ParseError, "atom count mismatch");
  return atoms;
}

std::string join(const std::vector<Atom>& atoms) {
  std::string out;
  for (const auto& a : atoms) out += a;
  return out;
}

std::vector<Atom> atoms_of(std::string_view text) {
  std::vector<Atom> out;
  out.reserve(text.size());
  for (char c : text) out.emplace_back(1, c);
  return out;
}

}  // namespace treedoc
