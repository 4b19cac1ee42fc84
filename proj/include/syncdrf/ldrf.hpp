//===- ldrf.hpp - Thread-local semantics with versioned envs ----*- C++ -*-===//
//
// Every thread owns a local copy of all variables, each tagged with a
// version that counts the writes it has seen. Releases publish the local
// copy into a buffer at the post-release location; acquires pull in, per
// variable, the value carrying the highest version among the thread's own
// copy and the buffers of the lock.
//
//===----------------------------------------------------------------------===//
#ifndef SYNCDRF_LDRF_HPP
#define SYNCDRF_LDRF_HPP

#include "syncdrf/concrete.hpp"
#include "syncdrf/lang.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace syncdrf {

using Version = std::uint64_t;

struct VersionedEnv {
  std::vector<Value> phi;
  std::vector<Version> nu;

  auto operator<=>(const VersionedEnv &) const = default;
};

struct LdrfState {
  std::vector<Loc> pc;
  std::vector<int> mu;
  std::vector<VersionedEnv> theta;      // per thread
  std::map<Loc, VersionedEnv> lambda;   // per post-release location

  auto operator<=>(const LdrfState &) const = default;
};

/// Signals a state in which two environments agree on a version of some
/// variable but not on its value.
class AdmissibilityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Post-release location -> pre-acquire locations allowed to read it.
using Gamma = std::map<Loc, std::set<Loc>>;

struct LdrfOptions {
  /// Version bumps follow regions; singletons give the plain semantics.
  std::optional<RegionMap> regions;
  std::optional<Gamma> gamma;
  /// Fault injection for harness self-tests: writes leave versions alone.
  bool bump_versions = true;
};

VersionedEnv zero_env(const Program &p);
LdrfState initial_ldrf_state(const Program &p);

/// Pairs <phi(x), nu(x)> of the environments in `ys` whose version of x is
/// maximal. Throws std::invalid_argument on empty input.
std::set<std::pair<Value, Version>> take(VarId x,
                                         const std::vector<VersionedEnv> &ys);

/// Every environment that takes each variable from {ve} u xs.
std::vector<VersionedEnv> upd_env(const VersionedEnv &ve,
                                  const std::vector<VersionedEnv> &xs);

/// Buffers read by an acquire at `pre_acquire` of lock m.
std::vector<Loc> relevant_buffers(const Program &p, LockId m, Loc pre_acquire,
                                  const LdrfOptions &opts);

/// Successor states, empty when disabled. Throws AdmissibilityError if an
/// acquire meets an inadmissible state.
std::vector<LdrfState> ldrf_step(const Program &p, const LdrfState &s,
                                 const Instruction &ins, const LdrfOptions &opts,
                                 const std::vector<Value> &havoc_values);

/// The standard state represented by `s`: each variable takes the value at
/// its highest version among the thread environments.
StdState extract_chi(const LdrfState &s);

bool is_admissible(const LdrfState &s);

std::string format_versioned_env(const Program &p, const VersionedEnv &ve);
std::string format_ldrf_state(const Program &p, const LdrfState &s);

} // namespace syncdrf

#endif // SYNCDRF_LDRF_HPP
