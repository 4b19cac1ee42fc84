//===- checker.hpp - Owned variables and assertion discharge ----*- C++ -*-===//
//
// Facts are only trustworthy on the variables a thread owns at a location,
// so assertions are checked against the fact with everything else
// forgotten.
//
//===----------------------------------------------------------------------===//
#ifndef SYNCDRF_CHECKER_HPP
#define SYNCDRF_CHECKER_HPP

#include "syncdrf/concrete.hpp"
#include "syncdrf/engine.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace syncdrf {

enum class OwnedMode { Static, Oracle };

std::string_view to_string(OwnedMode m);

struct OwnedMap {
  OwnedMode mode = OwnedMode::Static;
  int depth = 0; // exploration depth for Oracle
  std::map<Loc, std::set<VarId>> owned;

  const std::set<VarId> &at(Loc n) const { return owned.at(n); }
};

/// Locks held on every path from the thread's entry to each location.
std::map<Loc, std::set<LockId>> must_hold_locks(const Program &p);

/// x is owned at (t, n) when no other thread touches x, or some lock held
/// at n is held at every access to x by other threads.
OwnedMap compute_owned_static(const Program &p);

/// Owned sets from bounded race search. Restricted to `locs` when given.
OwnedMap compute_owned_oracle(const Program &p, const ExploreOptions &opts,
                              const std::vector<Loc> &locs = {});

struct AssertionResult {
  Loc location = 0;
  std::string thread;
  std::string condition;
  bool proved = false;
  std::string fact;
  std::vector<std::string> owned;
  std::string reason; // why it is unproved
};

struct Report {
  std::string program;
  std::string analysis;
  std::string domain;
  bool recency = false;
  std::vector<std::string> regions; // `name { a, b }`
  std::string owned_mode;
  std::vector<AssertionResult> assertions;
  /// Pre-serialized JSON objects; empty means `{}`.
  std::string races_json;
  std::string metatheory_json;
  std::map<std::string, double> timing_ms;

  std::size_t proved() const;
};

Report check_assertions(const Program &p, const LocationFacts &facts,
                        const OwnedMap &owned);

/// Fills the configuration fields of a report.
void describe_config(Report &r, const Program &p, const AnalysisConfig &cfg);

enum class ReportFormat { Text, Json };

/// `{"depth": N, "data": [...], "region": [...]}` with one entry per race:
/// unit, both steps and the witness trace.
std::string races_to_json(const Program &p, int depth,
                          const std::vector<RaceReport> &data,
                          const std::vector<RaceReport> &region = {});

std::string emit_report(const Report &r, ReportFormat format);

} // namespace syncdrf

#endif // SYNCDRF_CHECKER_HPP
