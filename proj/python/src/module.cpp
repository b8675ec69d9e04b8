#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "treedoc/error.hpp"
#include "treedoc/runner.hpp"
#include "treedoc/sim.hpp"
#include "treedoc/structure.hpp"

namespace py = pybind11;
using namespace treedoc;

namespace {

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["live_sites"] = m.live_sites;
  d["atoms"] = m.atoms;
  d["max_depth"] = m.max_depth;
  d["avg_depth"] = m.avg_depth;
  d["nil_ratio"] = m.nil_ratio;
  d["id_bytes_per_atom"] = m.id_bytes_per_atom;
  d["lost_ops"] = m.lost_ops;
  d["ops_initiated"] = m.ops_initiated;
  d["flatten_commits"] = m.flatten_commits;
  d["flatten_aborts"] = m.flatten_aborts;
  d["gc_removed"] = m.gc_removed;
  d["sides_cleaned"] = m.sides_cleaned;
  return d;
}

py::dict check_dict(const CheckResult& r) {
  py::dict d;
  d["ok"] = r.ok;
  d["failures"] = r.failures;
  d["witness"] = r.witness;
  return d;
}

py::dict outcome_dict(const RunOutcome& o) {
  py::dict d;
  d["exit_code"] = o.exit_code;
  d["report"] = o.report;
  d["trace"] = o.trace;
  return d;
}

std::vector<std::pair<std::string, std::string>> live_pairs(const Treedoc& doc) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& la : doc.live_atoms()) out.emplace_back(encode(la.id), la.atom);
  return out;
}

}  // namespace

PYBIND11_MODULE(_treedoc, m) {
  m.doc() = "Treedoc sequence CRDT: replicas, a deterministic simulator and a fuzzer.";

  py::register_exception<Error>(m, "TreedocError", PyExc_RuntimeError);

  m.def("canonical_height", &canonical_height, py::arg("n"));
  m.def("normalize_id", [](const std::string& s) { return encode(parse_pos_id(s)); }, py::arg("pos_id"));
  m.def("dir_bits", [](const std::string& s) { return dir_bits(parse_pos_id(s)); }, py::arg("pos_id"));
  m.def(
      "compare_ids",
      [](const std::string& a, const std::string& b) {
        const auto c = compare(parse_pos_id(a), parse_pos_id(b));
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
      },
      py::arg("a"), py::arg("b"));

  py::class_<Treedoc>(m, "Document")
      .def(py::init<>())
      .def_static(
          "explode", [](const std::string& text) { return explode({atoms_of(text), 0}); }, py::arg("text"))
      .def("render", &Treedoc::render)
      .def("__len__", &Treedoc::size)
      .def("uid_at", [](const Treedoc& d, std::size_t i) { return encode(d.uid_at(i)); }, py::arg("index"))
      .def("live_atoms", &live_pairs)
      .def(
          "flatten", [](const Treedoc& d, const std::string& slot) { return join(flatten_local(d, parse_pos_id(slot)).atoms); },
          py::arg("slot") = "[]")
      .def_property_readonly("max_depth", [](const Treedoc& d) { return d.stats().max_depth; });

  py::class_<Site>(m, "Site")
      .def_property_readonly("id", &Site::id)
      .def("insert", [](Site& s, std::size_t i, const std::string& a) { return encode(s.insert(i, a)); },
           py::arg("index"), py::arg("atom"))
      .def("erase", [](Site& s, std::size_t i) { return encode(s.erase(i)); }, py::arg("index"))
      .def("txn_begin", &Site::txn_begin)
      .def("txn_end", &Site::txn_end)
      .def("heartbeat", &Site::heartbeat)
      .def("render", [](const Site& s) { return s.doc().render(); })
      .def("live_atoms", [](const Site& s) { return live_pairs(s.doc()); })
      .def_property_readonly("document", [](const Site& s) { return s.doc(); })
      .def_property_readonly("vector_clock", [](const Site& s) { return encode(s.vc()); })
      .def_property_readonly("status", [](const Site& s) { return std::string(to_string(s.status)); })
      .def_property_readonly("txn_open", &Site::txn_open);

  py::class_<World>(m, "World")
      .def(py::init<std::size_t>(), py::arg("sites") = 0)
      .def("__len__", &World::size)
      .def("site", py::overload_cast<SiteId>(&World::site), py::arg("id"), py::return_value_policy::reference_internal)
      .def(
          "execute",
          [](World& w, const std::string& line) -> py::object {
            const auto r = w.execute(parse_event(line, 1));
            if (!r) return py::none();
            return check_dict(*r);
          },
          py::arg("event"))
      .def("exchange", &World::exchange, py::arg("a"), py::arg("b"))
      .def("sync", &World::sync)
      .def("quiesce", &World::quiesce)
      .def("check", [](const World& w) { return check_dict(w.check()); })
      .def("metrics", [](const World& w) { return metrics_dict(w.metrics()); })
      .def("live", &World::live);

  m.def(
      "run_scenario",
      [](const std::string& text, bool metrics) { return outcome_dict(run_scenario(text, {metrics})); },
      py::arg("text"), py::arg("metrics") = false);
  m.def(
      "run_fuzz",
      [](std::uint64_t seed, std::size_t sites, std::size_t ops, const std::string& faults, bool metrics) {
        FuzzOptions opt;
        opt.seed = seed;
        opt.sites = sites;
        opt.ops = ops;
        opt.faults = FaultProfile::parse(faults);
        const auto out = run_fuzz(opt, {metrics});
        auto d = outcome_dict(out);
        d["trace_text"] = trace_text(out);
        return d;
      },
      py::arg("seed"), py::arg("sites") = 3, py::arg("ops") = 200, py::arg("faults") = "none",
      py::arg("metrics") = false);
}
