#pragma once

// Scenario / trace events: one per line, `#` starts a comment. A leading `!`
// marks an event that is expected to be refused.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "treedoc/ids.hpp"

namespace treedoc {

enum class EventKind {
  Sites,           // sites K
  Insert,          // insert S INDEX ATOM
  Type,            // type S INDEX TEXT      (one insert per character)
  Delete,          // delete S INDEX
  Exchange,        // exchange A B
  Sync,            // sync                   (anti-entropy among connected sites until stable)
  Disconnect,      // disconnect S
  Reconnect,       // reconnect S
  Crash,           // crash S
  Recover,         // recover S from D       (new site id, copy of D)
  Suspect,         // suspect S
  Flatten,         // flatten S SLOT
  TxnBegin,        // txn-begin S
  TxnEnd,          // txn-end S
  Compact,         // compact S
  Heartbeat,       // heartbeat S
  Tick,            // tick
  Quiesce,         // quiesce
  Drop,            // drop S                 (last op of S is never shipped)
  Check,           // check
  Expect,          // expect S TEXT          (`-` for the empty document)
  ExpectId,        // expect-id S INDEX POSID
  ExpectDepth,     // expect-depth S N
  ExpectFlattens,  // expect-flattens COMMITS ABORTS
};

struct Event {
  EventKind kind = EventKind::Tick;
  std::vector<std::uint64_t> args;
  std::string text;
  PosId pos;
  bool expect_failure = false;
  std::size_t line = 0;  // source line, 0 when generated
};

std::string format_event(const Event& e);

/// Throws Error{ParseError} naming the line.
Event parse_event(std::string_view line, std::size_t line_no);

/// Blank and comment lines are skipped.
std::vector<Event> parse_scenario(std::string_view text);

}  // namespace treedoc
