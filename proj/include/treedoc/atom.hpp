#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace treedoc {

/// Opaque immutable payload. The harness uses one character per atom; any
/// non-empty byte string is accepted.
using Atom = std::string;

/// Percent-escapes bytes outside printable ASCII as well as '%', ',' and
/// space, so the result is a single whitespace-free token.
std::string escape_atom(std::string_view atom);
std::string unescape_atom(std::string_view token);

/// "<count>:<a>,<b>,..." with each atom escaped.
std::string encode_atoms(const std::vector<Atom>& atoms);
std::vector<Atom> decode_atoms(std::string_view token);

std::string join(const std::vector<Atom>& atoms);

/// One atom per UTF-8 byte; the harness's single-character convention.
std::vector<Atom> atoms_of(std::string_view text);

}  // namespace treedoc
