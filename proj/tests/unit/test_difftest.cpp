#include "common.hpp"
#include "doctest.h"
#include "syncdrf/difftest.hpp"

using namespace syncdrf;

namespace {

MetaOptions at_depth(int d) {
  MetaOptions o;
  o.depth = d;
  return o;
}

bool all_pass(const std::vector<CheckResult> &rs) {
  return std::all_of(rs.begin(), rs.end(), [](const CheckResult &r) { return r.passed(); });
}

const CheckResult &named(const std::vector<CheckResult> &rs, const std::string &n) {
  for (const CheckResult &r : rs)
    if (r.name == n)
      return r;
  throw std::out_of_range(n);
}

} // namespace

TEST_CASE("correspondence on fig1") {
  Program p = corpus_program("fig1.cp");
  CheckResult r = check_correspondence(p, at_depth(13));
  CHECK(r.passed());
  CHECK(r.instances > 20);

  CheckResult zero = check_correspondence(p, at_depth(0));
  CHECK(zero.passed());
  CHECK(zero.instances == 1);

  CHECK_THROWS_AS(check_correspondence(corpus_program("fig1_racy.cp"), at_depth(13)),
                  PreconditionError);
}

TEST_CASE("version lemmas") {
  Program p = corpus_program("fig1.cp");
  std::vector<CheckResult> rs = check_version_lemmas(p, at_depth(13));
  REQUIRE(rs.size() == 5);
  CHECK(all_pass(rs));
  for (const CheckResult &r : rs)
    CHECK(r.instances > 0);

  Program single = load_program("var x, y; thread t { x := 1; y := x; x := x + 1; }");
  CHECK(all_pass(check_version_lemmas(single, at_depth(5))));

  MetaOptions broken = at_depth(13);
  broken.ldrf.bump_versions = false;
  std::vector<CheckResult> bad = check_version_lemmas(p, broken);
  CHECK(!named(bad, "write_version").passed());
  CHECK(!named(bad, "write_version").violations.empty());

  CHECK_THROWS_AS(check_version_lemmas(corpus_program("fig1_racy.cp"), at_depth(13)),
                  PreconditionError);
}

TEST_CASE("local abstraction") {
  Program p = corpus_program("fig1.cp");
  LocalOptions o;
  CHECK(check_local_abstraction(p, o).passed());
  o.regions = parse_regions(read_corpus("fig1.rg"), p.vars);
  CheckResult reg = check_local_abstraction(p, o);
  CHECK(reg.passed());
  CHECK(reg.name == "local_abstraction_region");

  // The entry state and the first acquire.
  LocalOptions v;
  CHECK(local_abstraction_instance(p, {initial_ldrf_state(p)}, 0, v).empty());

  LocalOptions fault;
  fault.join_instead_of_mix = true;
  CheckResult bad = check_local_abstraction(p, fault);
  CHECK(!bad.passed());

  // Same seed, same result.
  LocalOptions a;
  a.seed = 7;
  CHECK(results_to_json({check_local_abstraction(p, a)}) ==
        results_to_json({check_local_abstraction(p, a)}));
}

TEST_CASE("generated programs are race free and pass") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    CAPTURE(seed);
    std::string text = generate_race_free_program(seed);
    CAPTURE(text);
    Program p = load_program(text);
    CHECK(p.threads.size() >= 2);
    CHECK(p.threads.size() <= 3);
    CHECK(generate_race_free_program(seed) == text);
    MetaOptions o = at_depth(10);
    CHECK(check_correspondence(p, o).passed());
    CHECK(all_pass(check_version_lemmas(p, o)));
    LocalOptions lo;
    lo.samples = 50;
    lo.seed = seed;
    CHECK(check_local_abstraction(p, lo).passed());
  }
}

TEST_CASE("results json") {
  CheckResult r;
  r.name = "demo";
  r.instances = 3;
  r.violation_count = 1;
  r.violations.push_back({"w", "e"});
  std::string j = results_to_json({r});
  CHECK(j.find("\"demo\"") != std::string::npos);
  CHECK(j.find("\"passed\": false") != std::string::npos);
  CHECK(j.find("\"explanation\": \"e\"") != std::string::npos);
}
