//===- difftest.hpp - Bounded checks of the metatheory ----------*- C++ -*-===//
//
// Exhaustive replay of the standard and L-DRF semantics against each other,
// the version lemmas over every enumerated L-DRF prefix, and sampled checks
// that the EnvSet transfer functions dominate the L-DRF steps.
//
//===----------------------------------------------------------------------===//
#ifndef SYNCDRF_DIFFTEST_HPP
#define SYNCDRF_DIFFTEST_HPP

#include "syncdrf/absdom.hpp"
#include "syncdrf/concrete.hpp"
#include "syncdrf/ldrf.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace syncdrf {

struct Violation {
  std::string witness;
  std::string explanation;
};

struct CheckResult {
  std::string name;
  std::size_t instances = 0;
  /// Total number found; only the first few are kept in `violations`.
  std::size_t violation_count = 0;
  std::vector<Violation> violations;

  bool passed() const { return violation_count == 0; }
};

/// Raised when a check needing a race-free program finds a race.
class PreconditionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct MetaOptions {
  int depth = 12;
  std::vector<Value> havoc_values{0, 1, 2};
  LdrfOptions ldrf;
  /// Skip the race search, e.g. when the caller already ran it.
  bool assume_race_free = false;
};

/// Every standard step is matched by an L-DRF step with the same chi image
/// and every L-DRF step maps to a standard step.
CheckResult check_correspondence(const Program &p, const MetaOptions &opts);

/// Version bounds, exact versions after writes, highest version at every
/// access, admissibility, and agreement on owned variables with the
/// standard replay, over every L-DRF execution up to the depth.
std::vector<CheckResult> check_version_lemmas(const Program &p,
                                              const MetaOptions &opts);

struct LocalOptions {
  std::size_t samples = 200;
  std::uint64_t seed = 1;
  int walk_depth = 12;
  std::vector<Value> havoc_values{0, 1, 2};
  /// Region granularity for both semantics; unset means variables.
  std::optional<RegionMap> regions;
  /// Fault injection: the abstract acquire joins instead of mixing.
  bool join_instead_of_mix = false;
};

/// Sampled reachable L-DRF state sets X, checked for every instruction.
CheckResult check_local_abstraction(const Program &p, const LocalOptions &opts);

/// The containment for one set X and one instruction. Returns the
/// violations found.
std::vector<Violation> local_abstraction_instance(const Program &p,
                                                  const std::vector<LdrfState> &xs,
                                                  std::size_t instr,
                                                  const LocalOptions &opts);

struct GeneratorOptions {
  int min_threads = 2, max_threads = 3;
  int shared_vars = 2;
  int locks = 1;
  int max_sections = 2;    // critical sections per thread
  int max_statements = 2;  // statements per section
};

/// Program text where every shared access sits inside the lock guarding
/// that variable, so it is race free by construction.
std::string generate_race_free_program(std::uint64_t seed,
                                       const GeneratorOptions &opts = {});

/// JSON object keyed by check name.
std::string results_to_json(const std::vector<CheckResult> &results);

} // namespace syncdrf

#endif // SYNCDRF_DIFFTEST_HPP
