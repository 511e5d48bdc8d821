#include "doctest.h"
#include "lmht/verify.hpp"

#include <atomic>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

using namespace lmht;

TEST_CASE("suite names") {
  for (const char* name : {"lemma41", "thm42", "cor43", "thm44", "lemmas1", "reparam", "grad", "all"}) {
    const auto s = parse_suite(name);
    REQUIRE(s.has_value());
    CHECK(std::string(to_string(*s)) == name);
  }
  CHECK_FALSE(parse_suite("bogus").has_value());
  CHECK_FALSE(parse_suite("").has_value());
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(1000, 4, [&](std::uint64_t i) { ++hits[i]; });
  for (const auto& h : hits) CHECK(h.load() == 1);
  parallel_for(0, 4, [](std::uint64_t) { FAIL("no work expected"); });
  CHECK_THROWS_AS(parallel_for(100, 3,
                               [](std::uint64_t i) {
                                 if (i == 57) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("thread budget honours LMHT_THREADS") {
  ::setenv("LMHT_THREADS", "3", 1);
  CHECK(thread_budget() == 3);
  ::setenv("LMHT_THREADS", "zero", 1);
  CHECK(thread_budget() >= 1);
  ::unsetenv("LMHT_THREADS");
  CHECK(thread_budget() >= 1);
}

TEST_CASE("reports do not depend on the thread count") {
  VerifyOptions opts;
  opts.suite = Suite::All;
  opts.trials = 200;
  opts.seed = 5;
  opts.threads = 1;
  const VerifyResult serial = run_verify(opts);
  const std::string a = render_report(serial, opts);
  opts.threads = 4;
  const std::string b = render_report(run_verify(opts), opts);
  CHECK(a == b);
  CHECK(serial.ok());
}

TEST_CASE("report layout") {
  VerifyOptions opts;
  opts.suite = Suite::Lemma41;
  opts.trials = 10;
  const VerifyResult result = run_verify(opts);
  REQUIRE(result.reports.size() == 10);
  REQUIRE(result.summaries.size() == 1);
  CHECK(result.summaries[0].passed + result.summaries[0].skipped == 10);

  std::istringstream lines(render_report(result, opts));
  std::vector<nlohmann::json> records;
  for (std::string line; std::getline(lines, line);) records.push_back(nlohmann::json::parse(line));
  REQUIRE(records.size() == 13);
  CHECK(records.front()["record"] == "header");
  CHECK(records.front()["expectation_input"] == "x ~ U[0, theta]");
  for (std::size_t i = 1; i <= 10; ++i) {
    CHECK(records[i]["suite"] == "lemma41");
    CHECK(records[i]["id"] == i - 1);
  }
  CHECK(records[11]["record"] == "summary");
  CHECK(records[12]["record"] == "result");
  CHECK(records[12]["ok"] == true);
}

TEST_CASE("different seeds give different trials") {
  VerifyOptions a;
  a.suite = Suite::Thm42;
  a.trials = 5;
  VerifyOptions b = a;
  b.seed = 2;
  CHECK(render_report(run_verify(a), a) != render_report(run_verify(b), b));
}

TEST_CASE("grad suite families") {
  VerifyOptions opts;
  opts.suite = Suite::Grad;
  opts.trials = 30;
  const VerifyResult result = run_verify(opts);
  std::vector<std::string> names;
  for (const auto& s : result.summaries) names.push_back(s.suite);
  CHECK(names == std::vector<std::string>{"grad-detached", "grad-vanilla", "grad-detach"});
  CHECK(result.ok());
}

TEST_CASE("random networks meet the reparameterization preconditions") {
  for (std::uint64_t id = 0; id < 50; ++id) {
    const NetworkSpec net = random_reparam_network(1, id);
    CHECK(net.layers.size() == 3);
    const int levels = net.layers[0].levels;
    CHECK(levels >= 2);
    CHECK(levels <= 4);
    for (const auto& layer : net.layers) {
      CHECK(layer.levels == levels);
      CHECK(layer.v0 >= 0.0);
      CHECK(layer.v0 < layer.threshold);
      CHECK(constrained_view(layer.tgim).leak <= 1.0);
    }
  }
  for (std::uint64_t id = 0; id < 50; ++id) {
    const NetworkSpec toy = random_toy_network(1, id, 3);
    CHECK(toy.layers.size() <= 3);
    CHECK(toy.horizon <= 4);
    CHECK(toy.layers[0].levels <= 3);
    for (const auto& layer : toy.layers) CHECK(layer.out_width() <= 4);
  }
}
