#include "treedoc/txn.hpp"

#include <algorithm>

#include "treedoc/error.hpp"

namespace treedoc {

void LocalTxn::begin(const OpId& start) {
  if (start_) throw Error(Errc::IllegalNesting, "transaction " + encode(*start_) + " is still open");
  start_ = start;
}

OpId LocalTxn::end() {
  if (!start_) throw Error(Errc::NoOpenTransaction, "no open transaction");
  const OpId s = *start_;
  start_.reset();
  return s;
}

std::vector<Operation> TxnBuffer::feed(Operation op) {
  if (op.kind == OpKind::TxnStart) {
    open_[op.site].push_back(std::move(op));
    return {};
  }
  auto it = open_.find(op.site);
  if (it == open_.end()) return {std::move(op)};
  const bool closes = op.kind == OpKind::TxnEnd;
  it->second.push_back(std::move(op));
  if (!closes) return {};
  std::vector<Operation> group = std::move(it->second);
  open_.erase(it);
  return group;
}

namespace {

void check_range(const EditSink& sink, std::size_t index, std::size_t count) {
  const auto n = sink.text().size();
  if (index > n || count > n - index) throw Error(Errc::IndexOutOfRange, "range past end of document");
}

}  // namespace

void replace_range(EditSink& sink, std::size_t index, std::size_t count, const std::vector<Atom>& with) {
  check_range(sink, index, count);
  sink.txn_begin();
  for (std::size_t i = 0; i < count; ++i) sink.delete_at(index);
  for (std::size_t i = 0; i < with.size(); ++i) sink.insert_at(index + i, with[i]);
  sink.txn_end();
}

void cut_paste(EditSink& sink, std::size_t from, std::size_t count, std::size_t to) {
  check_range(sink, from, count);
  const auto text = sink.text();
  if (to > text.size() - count) throw Error(Errc::IndexOutOfRange, "paste index past end of document");
  const std::vector<Atom> moved(text.begin() + static_cast<std::ptrdiff_t>(from),
                                text.begin() + static_cast<std::ptrdiff_t>(from + count));
  sink.txn_begin();
  for (std::size_t i = 0; i < count; ++i) sink.delete_at(from);
  for (std::size_t i = 0; i < moved.size(); ++i) sink.insert_at(to + i, moved[i]);
  sink.txn_end();
}

std::size_t search_replace(EditSink& sink, const std::vector<Atom>& needle, const std::vector<Atom>& with) {
  if (needle.empty()) throw Error(Errc::PreconditionViolated, "empty search pattern");
  const auto text = sink.text();
  std::vector<std::size_t> hits;
  for (auto it = text.begin(); (it = std::search(it, text.end(), needle.begin(), needle.end())) != text.end();
       it += static_cast<std::ptrdiff_t>(needle.size())) {
    hits.push_back(static_cast<std::size_t>(it - text.begin()));
  }
  if (hits.empty()) return 0;
  sink.txn_begin();
  // Right to left so earlier indices stay valid.
  for (auto h = hits.rbegin(); h != hits.rend(); ++h) {
    for (std::size_t i = 0; i < needle.size(); ++i) sink.delete_at(*h);
    for (std::size_t i = 0; i < with.size(); ++i) sink.insert_at(*h + i, with[i]);
  }
  sink.txn_end();
  return hits.size();
}

}  // namespace treedoc
