#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "treedoc/ids.hpp"

namespace treedoc {

class VectorClock {
 public:
  VectorClock() = default;
  VectorClock(std::initializer_list<std::pair<const SiteId, std::uint64_t>> init);

  std::uint64_t get(SiteId site) const noexcept;
  void set(SiteId site, std::uint64_t value);
  std::uint64_t increment(SiteId site) { return ++entries_[site]; }

  /// Pointwise maximum.
  void merge(const VectorClock& other);

  /// Every entry of *this is >= the matching entry of `other`.
  bool dominates(const VectorClock& other) const noexcept;

  const std::map<SiteId, std::uint64_t>& entries() const noexcept { return entries_; }

  /// Zero entries are not significant.
  friend bool operator==(const VectorClock& a, const VectorClock& b) noexcept;

 private:
  std::map<SiteId, std::uint64_t> entries_;
};

bool happens_before(const VectorClock& a, const VectorClock& b) noexcept;
bool concurrent(const VectorClock& a, const VectorClock& b) noexcept;

/// "{site:counter,...}" in ascending site order, zero entries omitted.
std::string encode(const VectorClock& vc);
VectorClock parse_vector_clock(std::string_view text);

/// Row s holds the latest vector clock site s is known to have delivered.
class MatrixClock {
 public:
  const VectorClock& row(SiteId site) const;
  void observe(SiteId site, const VectorClock& seen);   // rows only grow
  void merge(const MatrixClock& other);
  const std::map<SiteId, VectorClock>& rows() const noexcept { return rows_; }

 private:
  std::map<SiteId, VectorClock> rows_;
};

}  // namespace treedoc
