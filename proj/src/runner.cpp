#include "treedoc/runner.hpp"

#include <json.hpp>

#include "treedoc/error.hpp"

namespace treedoc {

namespace {

using nlohmann::ordered_json;

ordered_json metrics_json(const Metrics& m) {
  ordered_json j;
  j["live_sites"] = m.live_sites;
  j["atoms"] = m.atoms;
  j["max_depth"] = m.max_depth;
  j["avg_depth"] = m.avg_depth;
  j["nil_ratio"] = m.nil_ratio;
  j["id_bytes_per_atom"] = m.id_bytes_per_atom;
  j["lost_ops"] = m.lost_ops;
  j["ops_initiated"] = m.ops_initiated;
  j["flatten_commits"] = m.flatten_commits;
  j["flatten_aborts"] = m.flatten_aborts;
  j["gc_removed"] = m.gc_removed;
  j["sides_cleaned"] = m.sides_cleaned;
  return j;
}

// Shared by scenario runs and fuzz runs so a replayed trace reports the same.
class Reporter {
 public:
  explicit Reporter(const RunOptions& opt) : opt_(opt) {}

  void on_assertion(const Event& e, const CheckResult& r) {
    ++checks_;
    if (!r.ok) ++failed_;
    ordered_json j;
    j["type"] = "check";
    j["line"] = e.line;
    j["event"] = format_event(e);
    j["ok"] = r.ok;
    if (!r.ok) j["failures"] = r.failures;
    if (!r.witness.empty()) j["witness"] = r.witness;
    lines_.push_back(j.dump());
  }

  void on_error(const Event& e, const std::string& what) {
    ++failed_;
    ordered_json j;
    j["type"] = "error";
    j["line"] = e.line;
    j["event"] = format_event(e);
    j["error"] = what;
    lines_.push_back(j.dump());
  }

  void finish(const World& w, std::size_t events) {
    ordered_json j;
    j["type"] = "summary";
    j["ok"] = failed_ == 0;
    j["events"] = events;
    j["checks"] = checks_;
    j["failed"] = failed_;
    j["sites"] = w.size();
    j["live"] = w.live().size();
    if (!w.live().empty()) j["render"] = w.site(w.live().front()).doc().render();
    if (opt_.metrics) j["metrics"] = metrics_json(w.metrics());
    lines_.push_back(j.dump());
  }

  int exit_code() const { return failed_ ? 1 : 0; }
  std::vector<std::string>& lines() { return lines_; }

 private:
  const RunOptions& opt_;
  std::size_t checks_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> lines_;
};

std::string error_line(const std::string& what) {
  ordered_json j;
  j["type"] = "error";
  j["error"] = what;
  return j.dump();
}

}  // namespace

RunOutcome run_scenario(std::string_view text, const RunOptions& opt) {
  RunOutcome out;
  std::vector<Event> events;
  try {
    events = parse_scenario(text);
  } catch (const Error& e) {
    out.exit_code = 2;
    out.report.push_back(error_line(e.what()));
    return out;
  }
  World world;
  Reporter rep(opt);
  std::size_t executed = 0;
  for (const auto& e : events) {
    std::optional<CheckResult> result;
    std::string error;
    try {
      result = world.execute(e);
    } catch (const Error& ex) {
      error = ex.what();
    }
    ++executed;
    if (e.expect_failure) {
      if (error.empty()) {
        rep.on_error(e, "event was expected to be refused");
        break;
      }
      continue;
    }
    if (!error.empty()) {
      rep.on_error(e, error);
      break;
    }
    if (result) rep.on_assertion(e, *result);
  }
  rep.finish(world, executed);
  out.exit_code = rep.exit_code();
  out.report = std::move(rep.lines());
  return out;
}

RunOutcome run_fuzz(const FuzzOptions& fuzz_opt, const RunOptions& opt) {
  RunOutcome out;
  ordered_json head;
  head["type"] = "fuzz";
  head["seed"] = fuzz_opt.seed;
  head["sites"] = fuzz_opt.sites;
  head["ops"] = fuzz_opt.ops;
  head["faults"] = fuzz_opt.faults.name();
  World world;
  Reporter rep(opt);
  std::vector<Event> trace;
  try {
    trace = fuzz(world, fuzz_opt, [&](const Event& e, const std::optional<CheckResult>& r) {
      if (r) rep.on_assertion(e, *r);
    });
  } catch (const Error& ex) {
    Event none;
    rep.on_error(none, ex.what());
  }
  rep.finish(world, trace.size());
  out.exit_code = rep.exit_code();
  out.report.push_back(head.dump());
  for (auto& l : rep.lines()) out.report.push_back(std::move(l));
  out.trace.push_back("# fuzz seed=" + std::to_string(fuzz_opt.seed) + " sites=" + std::to_string(fuzz_opt.sites) +
                      " ops=" + std::to_string(fuzz_opt.ops) + " faults=" + fuzz_opt.faults.name());
  for (const auto& e : trace) out.trace.push_back(format_event(e));
  return out;
}

std::string trace_text(const RunOutcome& fuzz_outcome) {
  std::string s;
  for (const auto& l : fuzz_outcome.trace) s += l + "\n";
  return s;
}

}  // namespace treedoc
