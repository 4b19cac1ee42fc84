//===- engine.hpp - Worklist fixpoint over the sync-CFG ---------*- C++ -*-===//
//
// Location-indexed dataflow for the value-set, relational and region
// relational analyses. Acquires combine the thread's own fact with the facts
// at the post-release points feeding them through the mix operator.
//
//===----------------------------------------------------------------------===//
#ifndef SYNCDRF_ENGINE_HPP
#define SYNCDRF_ENGINE_HPP

#include "syncdrf/absdom.hpp"
#include "syncdrf/syncfg.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace syncdrf {

enum class AnalysisKind { ValSet, Rel, RegRel };

std::string_view to_string(AnalysisKind k);

struct AnalysisConfig {
  AnalysisKind analysis = AnalysisKind::Rel;
  DomainKind domain = DomainKind::Octagon;
  bool recency = false;
  /// Used by RegRel; defaults to the program's own region declarations.
  std::optional<RegionMap> regions;
  int widen_delay = 2;
  /// Widen to the program's constants before widening to infinity.
  bool widen_thresholds = true;
  std::size_t iteration_cap = 10000;
  /// Value box for EnvSet runs.
  Value box_lo = -4, box_hi = 4;
  std::vector<Value> havoc_values = {0, 1, 2};
};

class EngineError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct LocationFacts {
  std::map<Loc, RecencyTagged> facts;
  std::size_t visits = 0;
  /// An EnvSet run dropped successors outside the box.
  bool clamped = false;
  /// The descending pass was kept.
  bool narrowed = false;

  const RecencyTagged &at(Loc n) const { return facts.at(n); }
};

/// ValSet forces intervals (or the EnvSet reference) and singleton regions.
AnalysisConfig normalize(const AnalysisConfig &cfg);

/// Constants of p, their negations and their neighbours, sorted.
std::vector<Bound> widening_thresholds(const Program &p);

/// Regions driving the mix for this configuration.
RegionMap mix_regions(const Program &p, const AnalysisConfig &cfg);

LocationFacts analyze_fixpoint(const Program &p, const SyncCFG &g,
                               const AnalysisConfig &cfg);

/// Instructions whose transfer inequality fails; empty on a post-fixpoint.
std::vector<std::string> check_post_fixpoint(const Program &p, const SyncCFG &g,
                                             const AnalysisConfig &cfg,
                                             const LocationFacts &facts);

class BoxOverflowError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Exact set-based fixpoint over [lo, hi]. Throws BoxOverflowError when a
/// successor leaves the box unless allow_clamp is set.
LocationFacts collecting_fixpoint(const Program &p, const SyncCFG &g,
                                  AnalysisConfig cfg, Value lo, Value hi,
                                  bool allow_clamp = false);

/// Versioned collecting analysis: sets of versioned environments, acquires
/// through updEnv. Environments with a version above `version_cap` or a value
/// outside the box are dropped.
struct VersionedFacts {
  std::map<Loc, std::set<VersionedEnv>> facts;
  bool clamped = false;
};

VersionedFacts collecting_vrel(const Program &p, const SyncCFG &g, Value lo,
                               Value hi, Version version_cap,
                               const std::vector<Value> &havoc_values = {0, 1, 2});

std::set<Env> drop_versions(const std::set<VersionedEnv> &s);

/// Constraints of the octagon hull of `inner` that survive enlarging the
/// box to `outer`: entries that move between the two are dropped.
std::string stable_constraints(const std::set<Env> &inner, const std::set<Env> &outer,
                               const std::vector<std::string> &vars);

enum class CollectingKind { VRel, Rel, RegRel, ValSet };

/// Per-location constraints of a collecting analysis over [0, box] that are
/// stable when the box (and version cap) grows by two.
std::map<Loc, std::string> stable_collecting_facts(const Program &p,
                                                   const SyncCFG &g,
                                                   CollectingKind kind, Value box);

/// The five analysis configurations compared for precision: value sets,
/// Rel and RegRel each with and without recency.
struct NamedConfig {
  std::string name;
  AnalysisConfig cfg;
};
std::vector<NamedConfig> standard_configs(const RegionMap &regions);

/// Locations where a more precise configuration's fact is not contained in
/// a less precise one's within [-box, box]^n. Checks VS >= RelNoT >= RelT >=
/// RegT and RelNoT >= RegNoT >= RegT.
std::vector<std::string> precision_order_violations(const Program &p,
                                                    const SyncCFG &g,
                                                    const RegionMap &regions,
                                                    Value box);

/// Constraint strings of a fact, split on the top-level separator.
std::vector<std::string> constraint_list(const AbsVal &d,
                                         const std::vector<std::string> &vars);

/// JSON array of {location, thread, constraints, recency_tids}.
std::string facts_to_json(const Program &p, const LocationFacts &facts);

} // namespace syncdrf

#endif // SYNCDRF_ENGINE_HPP
