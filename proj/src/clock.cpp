#include "treedoc/clock.hpp"

#include <charconv>

#include "treedoc/error.hpp"

namespace treedoc {

VectorClock::VectorClock(std::initializer_list<std::pair<const SiteId, std::uint64_t>> init) {
  for (const auto& [site, value] : init) set(site, value);
}

std::uint64_t VectorClock::get(SiteId site) const noexcept {
  auto it = entries_.find(site);
  return it == entries_.end() ? 0 : it->second;
}

void VectorClock::set(SiteId site, std::uint64_t value) {
  if (value == 0) {
    entries_.erase(site);
  } else {
    entries_[site] = value;
  }
}

void VectorClock::merge(const VectorClock& other) {
  for (const auto& [site, value] : other.entries_) {
    auto& mine = entries_[site];
    if (value > mine) mine = value;
  }
}

bool VectorClock::dominates(const VectorClock& other) const noexcept {
  for (const auto& [site, value] : other.entries_) {
    if (get(site) < value) return false;
  }
  return true;
}

bool operator==(const VectorClock& a, const VectorClock& b) noexcept {
  return a.dominates(b) && b.dominates(a);
}

bool happens_before(const VectorClock& a, const VectorClock& b) noexcept {
  return b.dominates(a) && !(a == b);
}

bool concurrent(const VectorClock& a, const VectorClock& b) noexcept {
  return !b.dominates(a) && !a.dominates(b);
}

std::string encode(const VectorClock& vc) {
  std::string out = "{";
  bool first = true;
  for (const auto& [site, value] : vc.entries()) {
    if (value == 0) continue;
    if (!first) out.push_back(',');
    first = false;
    out += std::to_string(site) + ":" + std::to_string(value);
  }
  out.push_back('}');
  return out;
}

VectorClock parse_vector_clock(std::string_view text) {
  auto fail = [&] { throw Error(Errc::ParseError, "bad vector clock '" + std::string(text) + "'"); };
  if (text.size() < 2 || text.front() != '{' || text.back() != '}') fail();
  VectorClock vc;
  std::string_view body = text.substr(1, text.size() - 2);
  while (!body.empty()) {
    const auto comma = body.find(',');
    std::string_view item = body.substr(0, comma);
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) fail();
    SiteId site{};
    std::uint64_t value{};
    auto r1 = std::from_chars(item.data(), item.data() + colon, site);
    auto r2 = std::from_chars(item.data() + colon + 1, item.data() + item.size(), value);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || r2.ptr != item.data() + item.size()) fail();
    vc.set(site, value);
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return vc;
}

const VectorClock& MatrixClock::row(SiteId site) const {
  static const VectorClock empty;
  auto it = rows_.find(site);
  return it == rows_.end() ? empty : it->second;
}

void MatrixClock::observe(SiteId site, const VectorClock& seen) { rows_[site].merge(seen); }

void MatrixClock::merge(const MatrixClock& other) {
  for (const auto& [site, vc] : other.rows_) rows_[site].merge(vc);
}

}  // namespace treedoc
