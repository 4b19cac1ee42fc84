//===- concrete.hpp - Interleaving semantics and race detection -*- C++ -*-===//
//
// Standard sequentially consistent semantics over program states
// <pc, mu, phi>, bounded enumeration of executions, the happens-before
// relation and depth-bounded data and region race search.
//
//===----------------------------------------------------------------------===//
#ifndef SYNCDRF_CONCRETE_HPP
#define SYNCDRF_CONCRETE_HPP

#include "syncdrf/lang.hpp"

#include <functional>
#include <map>
#include <set>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace syncdrf {

inline constexpr int kNoHolder = -1;

struct StdState {
  std::vector<Loc> pc;      // per thread
  std::vector<int> mu;      // per lock, holder thread or kNoHolder
  std::vector<Value> phi;   // per variable

  auto operator<=>(const StdState &) const = default;
};

class ResourceLimitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ExploreOptions {
  int depth = 12;
  std::vector<Value> havoc_values{0, 1, 2};
  /// Maximum number of executions (or states) visited before giving up.
  std::size_t budget = 20'000'000;
};

/// All variables zero, no lock held, every thread at its entry.
StdState initial_state(const Program &p);

/// Successors of `s` under instruction `ins`, one per havoc choice. Empty
/// when the instruction is disabled.
std::vector<StdState> std_step(const Program &p, const StdState &s,
                               const Instruction &ins,
                               const std::vector<Value> &havoc_values);

struct Transition {
  StdState pre;
  ThreadId tid = 0;
  std::size_t instr = 0; // index into Program::instructions
  StdState post;
};

struct Execution {
  StdState initial;
  std::vector<Transition> steps;

  const StdState &last() const {
    return steps.empty() ? initial : steps.back().post;
  }
};

/// Visits every execution of length <= depth once, prefixes included, in
/// canonical (thread, instruction, havoc value) depth-first order. The
/// callback returns false to stop early. Auxiliary instructions cost no
/// depth but are only taken while depth remains.
void enumerate_executions(const Program &p, const ExploreOptions &opts,
                          const std::function<bool(const Execution &)> &visit);

/// Reachable states by breadth-first search up to `depth` steps.
std::set<StdState> reachable_states(const Program &p, const ExploreOptions &opts);

struct HappensBefore {
  std::vector<std::pair<std::size_t, std::size_t>> po;
  std::vector<std::pair<std::size_t, std::size_t>> sw;
  /// hb[i][j] holds iff step i happens before step j (reflexive).
  std::vector<std::vector<bool>> hb;

  bool ordered(std::size_t i, std::size_t j) const {
    return hb[i][j] || hb[j][i];
  }
};

HappensBefore happens_before(const Program &p, const Execution &e);

struct RaceReport {
  Execution execution;
  std::size_t first = 0, second = 0;        // step indices, first < second
  std::size_t instr_first = 0, instr_second = 0;
  std::size_t unit = 0;                     // variable or region id
  std::string unit_name;
};

/// Races on variables. Reports are deduplicated per
/// (instruction, instruction, variable) keeping the first witness.
std::vector<RaceReport> find_data_races(const Program &p,
                                        const ExploreOptions &opts);

/// Races on regions: accesses are lifted through `regions`.
std::vector<RaceReport> find_region_races(const Program &p,
                                          const RegionMap &regions,
                                          const ExploreOptions &opts);

struct RaceSearchOptions {
  ExploreOptions explore;
  /// Only units listed here are reported; empty means all.
  std::set<std::size_t> units;
  /// Only pairs involving this instruction are reported.
  std::optional<std::size_t> involving;
  /// Stop as soon as every unit in `units` has a report.
  bool stop_when_all_found = false;
};

/// Generic path-based search behind the two functions above.
std::vector<RaceReport> find_races(const Program &p, const RegionMap &lift,
                                   const RaceSearchOptions &opts);

struct RegionTranslation {
  Program program;
  /// Maps each instruction of `program` to the original instruction.
  std::vector<std::size_t> origin;
  /// Fresh variable standing for each region.
  std::vector<VarId> region_var;
};

/// Adds one variable X_r per region and prefixes every access with
/// assignments to those variables, so that data races on X_r correspond to
/// region races of the input. Prefix instructions are auxiliary.
RegionTranslation translate_for_region_races(const Program &p,
                                             const RegionMap &regions);

/// Region races found through the translation, as unordered
/// (source location, source location, region) triples.
std::set<std::tuple<Loc, Loc, RegionId>>
region_races_via_translation(const Program &p, const RegionMap &regions,
                             const ExploreOptions &opts);
/// Same triples from the direct search.
std::set<std::tuple<Loc, Loc, RegionId>>
region_race_keys(const Program &p, const std::vector<RaceReport> &races);

/// Variables x such that inserting `assume(x == x)` at n creates no race up
/// to the depth bound.
std::set<VarId> owned_vars_oracle(const Program &p, ThreadId t, Loc n,
                                  const ExploreOptions &opts);

std::string format_state(const Program &p, const StdState &s);
/// One line per step `t1 1 -[acquire(m)]-> 2` followed by po and sw lists.
std::string format_trace(const Program &p, const Execution &e);

} // namespace syncdrf

#endif // SYNCDRF_CONCRETE_HPP
