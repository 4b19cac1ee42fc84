#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "syncdrf/checker.hpp"
#include "syncdrf/difftest.hpp"
#include "syncdrf/syncfg.hpp"

namespace py = pybind11;
using namespace syncdrf;

namespace {

ExploreOptions explore(int depth, const std::vector<Value> &havoc) {
  ExploreOptions o;
  o.depth = depth;
  o.havoc_values = havoc;
  return o;
}

std::optional<RegionMap> region_map(const Program &p, const std::optional<std::string> &text) {
  if (!text)
    return std::nullopt;
  return parse_regions(*text, p.vars);
}

std::string analyze(const std::string &source, const std::string &analysis,
                    const std::string &domain, bool recency,
                    const std::optional<std::string> &regions, const std::string &owned,
                    int depth, const std::vector<Value> &havoc, const std::string &format) {
  Program p = load_program(source);
  AnalysisConfig cfg;
  if (analysis == "valset")
    cfg.analysis = AnalysisKind::ValSet;
  else if (analysis == "regrel")
    cfg.analysis = AnalysisKind::RegRel;
  else if (analysis != "rel")
    throw py::value_error("unknown analysis " + analysis);
  if (domain == "interval")
    cfg.domain = DomainKind::Interval;
  else if (domain == "envset")
    cfg.domain = DomainKind::EnvSet;
  else if (domain != "octagon")
    throw py::value_error("unknown domain " + domain);
  if (owned != "static" && owned != "oracle")
    throw py::value_error("unknown owned mode " + owned);
  cfg.recency = recency;
  cfg.regions = region_map(p, regions);
  cfg.havoc_values = havoc;
  LocationFacts facts = analyze_fixpoint(p, build_syncfg(p), cfg);
  std::vector<Loc> locs;
  for (const Assertion &a : p.assertions)
    locs.push_back(a.loc);
  OwnedMap own = owned == "static" ? compute_owned_static(p)
                                   : compute_owned_oracle(p, explore(depth, havoc), locs);
  Report r = check_assertions(p, facts, own);
  describe_config(r, p, cfg);
  return emit_report(r, format == "text" ? ReportFormat::Text : ReportFormat::Json);
}

std::string races(const std::string &source, int depth, const std::vector<Value> &havoc,
                  const std::optional<std::string> &regions) {
  Program p = load_program(source);
  ExploreOptions eo = explore(depth, havoc);
  std::vector<RaceReport> region;
  if (auto rm = region_map(p, regions))
    region = find_region_races(p, *rm, eo);
  return races_to_json(p, depth, find_data_races(p, eo), region);
}

std::string metacheck(const std::string &source, int depth, const std::vector<Value> &havoc,
                      std::size_t samples, std::uint64_t seed,
                      const std::optional<std::string> &regions) {
  Program p = load_program(source);
  MetaOptions mo;
  mo.depth = depth;
  mo.havoc_values = havoc;
  std::vector<CheckResult> rs{check_correspondence(p, mo)};
  mo.assume_race_free = true;
  for (CheckResult &c : check_version_lemmas(p, mo))
    rs.push_back(std::move(c));
  LocalOptions lo;
  lo.samples = samples;
  lo.seed = seed;
  lo.walk_depth = depth;
  lo.havoc_values = havoc;
  rs.push_back(check_local_abstraction(p, lo));
  lo.regions = regions ? *region_map(p, regions) : p.regions;
  rs.push_back(check_local_abstraction(p, lo));
  return results_to_json(rs);
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the syncdrf analyzer";

  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<EngineError>(m, "EngineError", PyExc_RuntimeError);

  m.def("print_program", [](const std::string &source) {
    return print_program(load_program(source));
  });
  m.def("analyze", &analyze, py::arg("source"), py::arg("analysis") = "rel",
        py::arg("domain") = "octagon", py::arg("recency") = false,
        py::arg("regions") = py::none(), py::arg("owned") = "oracle", py::arg("depth") = 12,
        py::arg("havoc") = std::vector<Value>{0, 1, 2}, py::arg("format") = "json");
  m.def("races", &races, py::arg("source"), py::arg("depth") = 12,
        py::arg("havoc") = std::vector<Value>{0, 1, 2}, py::arg("regions") = py::none());
  m.def("metacheck", &metacheck, py::arg("source"), py::arg("depth") = 12,
        py::arg("havoc") = std::vector<Value>{0, 1, 2}, py::arg("samples") = 200,
        py::arg("seed") = 1, py::arg("regions") = py::none());
  m.def("dot", [](const std::string &source) {
    Program p = load_program(source);
    return to_dot(build_syncfg(p), p);
  });
  m.def("generate_race_free_program", [](std::uint64_t seed) {
    return generate_race_free_program(seed);
  });
}
