#pragma once

// Transactions: local begin/end bookkeeping, buffering of remote
// transactions until their end marker, and block edits built from them.

#include <map>
#include <optional>
#include <vector>

#include "treedoc/operation.hpp"

namespace treedoc {

/// At most one open transaction per site; no nesting.
class LocalTxn {
 public:
  void begin(const OpId& start);  // throws IllegalNesting
  OpId end();                     // throws NoOpenTransaction; returns the start marker
  bool open() const noexcept { return start_.has_value(); }
  const std::optional<OpId>& start() const noexcept { return start_; }

 private:
  std::optional<OpId> start_;
};

/// Holds each remote site's open transaction until TXN_END arrives.
class TxnBuffer {
 public:
  /// Feeds a delivered remote operation. Returns the operations that must be
  /// applied now: nothing while a transaction is being collected, the whole
  /// group (markers included) when it closes, or `op` itself otherwise.
  std::vector<Operation> feed(Operation op);

  bool buffering(SiteId site) const { return open_.count(site) != 0; }
  bool empty() const noexcept { return open_.empty(); }
  const std::map<SiteId, std::vector<Operation>>& open() const noexcept { return open_; }

 private:
  std::map<SiteId, std::vector<Operation>> open_;
};

/// Index-based editing surface used by the block helpers.
class EditSink {
 public:
  virtual ~EditSink() = default;
  virtual void txn_begin() = 0;
  virtual void txn_end() = 0;
  virtual void insert_at(std::size_t index, const Atom& atom) = 0;
  virtual void delete_at(std::size_t index) = 0;
  virtual std::vector<Atom> text() const = 0;
};

/// Replaces `count` atoms at `index` with `with`, as one transaction.
void replace_range(EditSink& sink, std::size_t index, std::size_t count, const std::vector<Atom>& with);

/// Moves `count` atoms at `from` so they start at `to`, an index into the
/// text with the moved atoms removed. One transaction.
void cut_paste(EditSink& sink, std::size_t from, std::size_t count, std::size_t to);

/// Replaces every occurrence of `needle` (non-empty) with `with`, scanning
/// left to right without overlap. One transaction; returns the match count.
std::size_t search_replace(EditSink& sink, const std::vector<Atom>& needle, const std::vector<Atom>& with);

}  // namespace treedoc
