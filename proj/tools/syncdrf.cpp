// Command-line front end: analyze, races, explore, metacheck, dot.

#include "syncdrf/checker.hpp"
#include "syncdrf/difftest.hpp"
#include "syncdrf/syncfg.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

using namespace syncdrf;

namespace {

enum Exit { kOk = 0, kUnproved = 1, kUsage = 2, kInternal = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string program_path;
  std::string analysis = "rel";
  std::string domain = "octagon";
  bool recency = false;
  std::string regions;
  int depth = 12;
  std::string havoc = "0,1,2";
  std::string owned = "oracle";
  std::string format = "text";
  std::string gamma = "default";
  std::uint64_t seed = 1;
  std::size_t samples = 200;
  std::size_t limit = 100;
  bool deterministic = false;
  bool with_races = false;
  bool with_metacheck = false;
};

std::string read_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Program load(const Flags &f) {
  try {
    return load_program(read_file(f.program_path));
  } catch (const UsageError &) {
    throw;
  } catch (const std::exception &e) {
    throw UsageError(f.program_path + ": " + e.what());
  }
}

std::vector<Value> havoc_values(const Flags &f) {
  std::vector<Value> out;
  std::stringstream ss(f.havoc);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(item, &used));
      if (used != item.size())
        throw std::invalid_argument(item);
    } catch (const std::exception &) {
      throw UsageError("bad --havoc-set entry '" + item + "'");
    }
  }
  if (out.empty())
    throw UsageError("--havoc-set is empty");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ExploreOptions explore_options(const Flags &f) {
  ExploreOptions o;
  o.depth = f.depth;
  o.havoc_values = havoc_values(f);
  return o;
}

// `default` takes the program's own declarations, or <program>.rg next to it.
std::optional<RegionMap> regions(const Flags &f, const Program &p) {
  if (f.regions.empty())
    return std::nullopt;
  std::string path = f.regions;
  if (path == "default") {
    if (!p.regions.is_singleton_partition())
      return p.regions;
    path = std::filesystem::path(f.program_path).replace_extension(".rg").string();
    if (!std::filesystem::exists(path))
      return p.regions;
  }
  try {
    return parse_regions(read_file(path), p.vars);
  } catch (const UsageError &) {
    throw;
  } catch (const std::exception &e) {
    throw UsageError(path + ": " + e.what());
  }
}

SyncCFG sync_graph(const Flags &f, const Program &p) {
  SyncCFG g = build_syncfg(p);
  if (f.gamma == "refined")
    g = refine_gamma(g, p, explore_options(f));
  return g;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

int cmd_analyze(const Flags &f) {
  auto t0 = std::chrono::steady_clock::now();
  Program p = load(f);
  AnalysisConfig cfg;
  cfg.analysis = f.analysis == "valset" ? AnalysisKind::ValSet
                 : f.analysis == "regrel" ? AnalysisKind::RegRel
                                          : AnalysisKind::Rel;
  cfg.domain = f.domain == "interval" ? DomainKind::Interval
               : f.domain == "envset" ? DomainKind::EnvSet
                                      : DomainKind::Octagon;
  cfg.recency = f.recency;
  cfg.regions = regions(f, p);
  cfg.havoc_values = havoc_values(f);
  if (cfg.regions && cfg.analysis != AnalysisKind::RegRel)
    throw UsageError("--regions needs --analysis regrel");

  std::map<std::string, double> timing;
  SyncCFG g = sync_graph(f, p);
  auto t1 = std::chrono::steady_clock::now();
  LocationFacts facts = analyze_fixpoint(p, g, cfg);
  timing["fixpoint"] = ms_since(t1);

  t1 = std::chrono::steady_clock::now();
  std::vector<Loc> locs;
  for (const Assertion &a : p.assertions)
    locs.push_back(a.loc);
  OwnedMap own = f.owned == "static" ? compute_owned_static(p)
                                     : compute_owned_oracle(p, explore_options(f), locs);
  timing["owned"] = ms_since(t1);

  Report r = check_assertions(p, facts, own);
  r.program = f.program_path;
  describe_config(r, p, cfg);
  if (f.with_races) {
    t1 = std::chrono::steady_clock::now();
    ExploreOptions eo = explore_options(f);
    std::vector<RaceReport> region;
    if (cfg.regions)
      region = find_region_races(p, *cfg.regions, eo);
    r.races_json = races_to_json(p, f.depth, find_data_races(p, eo), region);
    timing["races"] = ms_since(t1);
  }
  if (f.with_metacheck) {
    t1 = std::chrono::steady_clock::now();
    MetaOptions mo;
    mo.depth = f.depth;
    mo.havoc_values = cfg.havoc_values;
    std::vector<CheckResult> rs{check_correspondence(p, mo)};
    for (CheckResult &c : check_version_lemmas(p, mo))
      rs.push_back(std::move(c));
    r.metatheory_json = results_to_json(rs);
    timing["metatheory"] = ms_since(t1);
  }
  timing["total"] = ms_since(t0);
  if (f.deterministic)
    for (auto &[k, v] : timing)
      v = 0;
  r.timing_ms = timing;
  std::cout << emit_report(r, f.format == "json" ? ReportFormat::Json : ReportFormat::Text);
  return r.proved() == r.assertions.size() ? kOk : kUnproved;
}

int cmd_races(const Flags &f) {
  Program p = load(f);
  ExploreOptions eo = explore_options(f);
  std::vector<RaceReport> data = find_data_races(p, eo);
  std::vector<RaceReport> region;
  std::optional<RegionMap> rm = regions(f, p);
  if (rm) {
    region = find_region_races(p, *rm, eo);
    auto direct = region_race_keys(p, region);
    auto translated = region_races_via_translation(p, *rm, eo);
    if (direct != translated)
      throw std::runtime_error("region race search and translation disagree");
  }
  if (f.format == "json") {
    std::cout << nlohmann::ordered_json::parse(races_to_json(p, f.depth, data, region))
                     .dump(2)
              << "\n";
  } else {
    auto print = [&](const char *kind, const std::vector<RaceReport> &rs) {
      for (const RaceReport &r : rs) {
        const Instruction &a = p.instructions[r.instr_first];
        const Instruction &b = p.instructions[r.instr_second];
        std::cout << kind << " race on " << r.unit_name << ": "
                  << p.threads[a.thread].name << " " << a.source << " ["
                  << print_command(a.command, p) << "] / " << p.threads[b.thread].name
                  << " " << b.source << " [" << print_command(b.command, p) << "]\n";
        std::cout << format_trace(p, r.execution);
      }
    };
    print("data", data);
    print("region", region);
    std::cout << data.size() << " data race(s)";
    if (rm)
      std::cout << ", " << region.size() << " region race(s)";
    std::cout << " up to depth " << f.depth << "\n";
  }
  return data.empty() && region.empty() ? kOk : kUnproved;
}

int cmd_explore(const Flags &f) {
  Program p = load(f);
  ExploreOptions eo = explore_options(f);
  std::size_t shown = 0, total = 0;
  enumerate_executions(p, eo, [&](const Execution &e) {
    bool stuck = true;
    for (const Instruction &ins : p.instructions)
      if (!std_step(p, e.last(), ins, eo.havoc_values).empty()) {
        stuck = false;
        break;
      }
    if (!stuck && static_cast<int>(e.steps.size()) < f.depth)
      return true;
    ++total;
    if (shown < f.limit) {
      ++shown;
      std::cout << "# execution " << total << "\n" << format_trace(p, e)
                << "final " << format_state(p, e.last()) << "\n\n";
    }
    return true;
  });
  std::cout << total << " maximal execution(s) up to depth " << f.depth << ", "
            << shown << " shown\n";
  return kOk;
}

int cmd_metacheck(const Flags &f) {
  Program p = load(f);
  MetaOptions mo;
  mo.depth = f.depth;
  mo.havoc_values = havoc_values(f);
  std::vector<CheckResult> rs{check_correspondence(p, mo)};
  mo.assume_race_free = true;
  for (CheckResult &c : check_version_lemmas(p, mo))
    rs.push_back(std::move(c));
  LocalOptions lo;
  lo.samples = f.samples;
  lo.seed = f.seed;
  lo.walk_depth = f.depth;
  lo.havoc_values = mo.havoc_values;
  rs.push_back(check_local_abstraction(p, lo));
  std::optional<RegionMap> rm = regions(f, p);
  lo.regions = rm ? *rm : p.regions;
  rs.push_back(check_local_abstraction(p, lo));
  bool ok = std::all_of(rs.begin(), rs.end(), [](const CheckResult &r) { return r.passed(); });
  if (f.format == "json") {
    std::cout << results_to_json(rs) << "\n";
  } else {
    for (const CheckResult &r : rs) {
      std::cout << r.name << ": " << (r.passed() ? "pass" : "FAIL") << " (" << r.instances
                << " instances, " << r.violation_count << " violations)\n";
      for (const Violation &v : r.violations)
        std::cout << "  " << v.explanation << "\n" << v.witness << "\n";
    }
  }
  return ok ? kOk : kUnproved;
}

int cmd_dot(const Flags &f) {
  Program p = load(f);
  std::cout << to_dot(sync_graph(f, p), p);
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Data-race-free concurrent program analyzer"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App *sub) {
    sub->add_option("program", f.program_path, "Program file")->required();
    sub->add_option("--depth", f.depth, "Exploration depth")->check(CLI::NonNegativeNumber);
    sub->add_option("--havoc-set", f.havoc, "Values a havoc may take, e.g. \"0,1,2\"");
  };
  auto regions_opt = [&](CLI::App *sub) {
    sub->add_option("--regions", f.regions, "Region file, or 'default'");
  };
  auto format_opt = [&](CLI::App *sub) {
    sub->add_option("--format", f.format)->check(CLI::IsMember({"text", "json"}));
  };
  auto gamma_opt = [&](CLI::App *sub) {
    sub->add_option("--gamma", f.gamma)->check(CLI::IsMember({"default", "refined"}));
  };

  CLI::App *analyze = app.add_subcommand("analyze", "Analyze and check assertions");
  common(analyze);
  regions_opt(analyze);
  format_opt(analyze);
  gamma_opt(analyze);
  analyze->add_option("--analysis", f.analysis)
      ->check(CLI::IsMember({"valset", "rel", "regrel"}));
  analyze->add_option("--domain", f.domain)
      ->check(CLI::IsMember({"interval", "octagon", "envset"}));
  analyze->add_flag("--recency", f.recency, "Thread-identifier recency");
  analyze->add_option("--owned", f.owned)->check(CLI::IsMember({"static", "oracle"}));
  analyze->add_flag("--races", f.with_races, "Include a race search in the report");
  analyze->add_flag("--metacheck", f.with_metacheck, "Include metatheory checks");
  analyze->add_flag("--deterministic", f.deterministic, "Zero all timings");

  CLI::App *races = app.add_subcommand("races", "Search for data and region races");
  common(races);
  regions_opt(races);
  format_opt(races);

  CLI::App *explore = app.add_subcommand("explore", "Dump bounded executions");
  common(explore);
  explore->add_option("--limit", f.limit, "Executions to print");

  CLI::App *meta = app.add_subcommand("metacheck", "Check the metatheory on bounded instances");
  common(meta);
  regions_opt(meta);
  format_opt(meta);
  meta->add_option("--seed", f.seed);
  meta->add_option("--samples", f.samples);

  CLI::App *dot = app.add_subcommand("dot", "Export the sync-CFG");
  common(dot);
  gamma_opt(dot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (analyze->parsed())
      return cmd_analyze(f);
    if (races->parsed())
      return cmd_races(f);
    if (explore->parsed())
      return cmd_explore(f);
    if (meta->parsed())
      return cmd_metacheck(f);
    return cmd_dot(f);
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const PreconditionError &e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kInternal;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
}
