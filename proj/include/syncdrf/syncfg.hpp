//===- syncfg.hpp - Thread CFGs plus synchronization edges ------*- C++ -*-===//
#ifndef SYNCDRF_SYNCFG_HPP
#define SYNCDRF_SYNCFG_HPP

#include "syncdrf/concrete.hpp"
#include "syncdrf/ldrf.hpp"

#include <string>
#include <vector>

namespace syncdrf {

struct SyncEdge {
  Loc from = 0; // post-release location
  Loc to = 0;   // pre-acquire location
  LockId lock = 0;

  auto operator<=>(const SyncEdge &) const = default;
};

struct SyncCFG {
  std::vector<Loc> nodes;
  std::vector<std::size_t> intra_edges; // indices into Program::instructions
  std::vector<SyncEdge> sync_edges;     // sorted
  Gamma gamma;
  /// Set once gamma was pruned by bounded exploration. Analyses built on a
  /// refined graph are only sound if the exploration depth was sufficient.
  bool refined = false;

  /// Post-release locations feeding the acquire at `pre_acquire`.
  std::vector<Loc> sources_of(Loc pre_acquire, LockId m) const;
};

/// Sync edges from every post-release point of m to every pre-acquire point
/// of m.
SyncCFG build_syncfg(const Program &p);

/// Keeps only the sync edges witnessed by a synchronizes-with pair in some
/// execution up to the depth bound. UNSOUND-IF-DEPTH-INSUFFICIENT.
SyncCFG refine_gamma(const SyncCFG &g, const Program &p,
                     const ExploreOptions &opts);

/// Intra-thread edges solid, sync edges dashed and labelled with the lock.
std::string to_dot(const SyncCFG &g, const Program &p);

} // namespace syncdrf

#endif // SYNCDRF_SYNCFG_HPP
