#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "msa/pseudo.hpp"
#include "msa/rng.hpp"
#include "oracles.hpp"

using namespace msa;

namespace {

std::vector<ScoredTarget> scored_fixture(const std::vector<std::pair<double, double>>& ps) {
  // (prob, sim) pairs; ids "t1", "t2", ...
  std::vector<ScoredTarget> out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ScoredTarget t;
    t.instance = oracle::make_instance("t" + std::to_string(i + 1), "t", {1.0});
    t.pseudo_label = Label::positive;
    t.prob = ps[i].first;
    t.sim = ps[i].second;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::string> ids_of(const std::vector<ScoredTarget>& ts) {
  std::vector<std::string> out;
  for (const ScoredTarget& t : ts) out.push_back(t.instance.id);
  return out;
}

}  // namespace

TEST_CASE("centroid of one and of a symmetric pair") {
  std::vector<Instance> one{oracle::make_instance("a", "t", {3.0, -1.0})};
  CHECK(compute_centroid(one).vector == Vec{3.0, -1.0});

  std::vector<Instance> pair{oracle::make_instance("a", "t", {1.0, 0.0}),
                             oracle::make_instance("b", "t", {0.0, 1.0})};
  CHECK(compute_centroid(pair).vector == Vec{0.5, 0.5});

  CHECK_THROWS_AS(compute_centroid({}), ArgumentError);
}

TEST_CASE("centroid matches an independent summation order") {
  Rng rng(21);
  std::vector<Instance> targets;
  for (int i = 0; i < 5; ++i)
    targets.push_back(oracle::make_instance(
        "r" + std::to_string(i), "t",
        {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)}));
  const TargetCentroid c = compute_centroid(targets);
  for (int k = 0; k < 3; ++k) {
    double sum = 0.0;
    for (auto it = targets.rbegin(); it != targets.rend(); ++it) sum += it->repr[k];
    CHECK(c.vector[k] == doctest::Approx(sum / 5.0).epsilon(1e-12));
  }
}

TEST_CASE("cosine similarity basics") {
  const Instance x = oracle::make_instance("x", "t", {1.0, 2.0});
  CHECK(similarity(x, {Vec{1.0, 2.0}}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(similarity(x, {Vec{-2.0, 1.0}}) == doctest::Approx(0.0));
  CHECK(similarity(x, {Vec{2.0, 1.0}}) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(similarity(x, {Vec{0.0, 0.0}}) == 0.0);  // zero vector: defined as 0
  const Instance zero = oracle::make_instance("z", "t", {0.0, 0.0});
  CHECK(similarity(zero, {Vec{1.0, 1.0}}) == 0.0);
}

TEST_CASE("score_targets composes vote and similarity") {
  // null members: zero weights give prob exactly 0.5
  MajorityVoter null_voter({ProbClassifier(Vec{0.0, 0.0}, 0.0, 1.0),
                            ProbClassifier(Vec{0.0, 0.0}, 0.0, 1.0)});
  std::vector<Instance> targets{oracle::make_instance("a", "t", {1.0, 0.0}),
                                oracle::make_instance("b", "t", {2.0, 2.0}),
                                oracle::make_instance("c", "t", {0.5, 0.25})};
  const TargetCentroid centroid = compute_centroid(targets);
  const auto scored = score_targets(null_voter, targets, centroid);
  REQUIRE(scored.size() == 3);
  for (const ScoredTarget& t : scored) CHECK(t.prob == 0.5);

  // compositional oracle: each triple equals standalone calls
  MajorityVoter voter({ProbClassifier(Vec{1.0, -0.5}, 0.2, 1.0),
                       ProbClassifier(Vec{-0.3, 0.8}, -0.1, 1.0),
                       ProbClassifier(Vec{0.6, 0.6}, 0.0, 1.0)});
  const auto scored2 = score_targets(voter, targets, centroid);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Prediction direct = voter.vote(targets[i]);
    CHECK(scored2[i].pseudo_label == direct.label);
    CHECK(scored2[i].prob == direct.confidence);
    CHECK(scored2[i].sim == similarity(targets[i], centroid));
  }

  // a target collinear with the centroid has similarity 1
  std::vector<Instance> collinear{oracle::make_instance("d", "t", centroid.vector)};
  const auto scored3 = score_targets(voter, collinear, centroid);
  CHECK(scored3[0].sim == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("selection strategies") {
  SUBCASE("sim_only picks the top similarities") {
    const auto scored = scored_fixture({{0.5, 0.9}, {0.5, 0.2}, {0.5, 0.5}});
    const auto picked = select(scored, {SelectionKind::sim_only, SortOrder::dsc, 2});
    CHECK(ids_of(picked) == std::vector<std::string>{"t1", "t3"});
  }
  SUBCASE("prob_times_sim ranks by the product") {
    // keys: 0.54, 0.45, 0.56 -> t3 then t1
    const auto scored = scored_fixture({{0.6, 0.9}, {0.9, 0.5}, {0.7, 0.8}});
    const auto picked = select(scored, {SelectionKind::prob_times_sim, SortOrder::dsc, 2});
    CHECK(ids_of(picked) == std::vector<std::string>{"t3", "t1"});
  }
  SUBCASE("prob_plus_sim ranks by the sum") {
    const auto scored = scored_fixture({{0.6, 0.9}, {0.9, 0.7}, {0.7, 0.8}});
    // sums: 1.5, 1.6, 1.5 -> t2 first, then tie broken by id: t1
    const auto picked = select(scored, {SelectionKind::prob_plus_sim, SortOrder::dsc, 2});
    CHECK(ids_of(picked) == std::vector<std::string>{"t2", "t1"});
  }
  SUBCASE("k at or above the pool size returns everything sorted") {
    const auto scored = scored_fixture({{0.5, 0.1}, {0.5, 0.8}, {0.5, 0.4}});
    const auto picked = select(scored, {SelectionKind::sim_only, SortOrder::dsc, 10});
    CHECK(ids_of(picked) == std::vector<std::string>{"t2", "t3", "t1"});
  }
  SUBCASE("prob_only respects the order flag") {
    const auto scored = scored_fixture({{0.9, 0.0}, {0.6, 0.0}, {0.75, 0.0}});
    const auto dsc = select(scored, {SelectionKind::prob_only, SortOrder::dsc, 2});
    CHECK(ids_of(dsc) == std::vector<std::string>{"t1", "t3"});
    const auto asc = select(scored, {SelectionKind::prob_only, SortOrder::asc, 2});
    CHECK(ids_of(asc) == std::vector<std::string>{"t2", "t3"});
  }
  SUBCASE("prob_sim is lexicographic: prob first, sim breaks ties") {
    const auto scored = scored_fixture({{0.8, 0.1}, {0.8, 0.9}, {0.7, 1.0}});
    const auto picked = select(scored, {SelectionKind::prob_sim, SortOrder::dsc, 2});
    CHECK(ids_of(picked) == std::vector<std::string>{"t2", "t1"});
    const auto sim_first = select(scored, {SelectionKind::sim_prob, SortOrder::dsc, 2});
    CHECK(ids_of(sim_first) == std::vector<std::string>{"t3", "t2"});
  }
  SUBCASE("k must be positive and the pool non-empty") {
    const auto scored = scored_fixture({{0.5, 0.5}});
    CHECK_THROWS_AS(select(scored, {SelectionKind::sim_only, SortOrder::dsc, 0}),
                    ArgumentError);
    CHECK_THROWS_AS(select({}, {SelectionKind::sim_only, SortOrder::dsc, 1}),
                    ArgumentError);
  }
}

TEST_CASE("select is a filter: subset, size, idempotence") {
  Rng rng(77);
  std::vector<std::pair<double, double>> raw;
  for (int i = 0; i < 60; ++i) raw.emplace_back(rng.uniform(0.5, 1.0), rng.uniform(-1, 1));
  const auto scored = scored_fixture(raw);

  for (const SelectionKind kind :
       {SelectionKind::prob_only, SelectionKind::sim_only, SelectionKind::prob_sim,
        SelectionKind::sim_prob, SelectionKind::prob_times_sim,
        SelectionKind::prob_plus_sim}) {
    const SelectionStrategy strat{kind, SortOrder::dsc, 17};
    const auto picked = select(scored, strat);
    CHECK(picked.size() == 17);
    std::set<std::string> pool;
    for (const ScoredTarget& t : scored) pool.insert(t.instance.id);
    for (const ScoredTarget& t : picked) CHECK(pool.count(t.instance.id) == 1);
    const auto again = select(picked, strat);
    CHECK(ids_of(again) == ids_of(picked));
  }
}

TEST_CASE("sim_only: minimum selected similarity dominates the unselected") {
  Rng rng(78);
  std::vector<std::pair<double, double>> raw;
  for (int i = 0; i < 40; ++i) raw.emplace_back(0.5, rng.uniform(-1, 1));
  const auto scored = scored_fixture(raw);
  const auto picked = select(scored, {SelectionKind::sim_only, SortOrder::dsc, 10});
  std::set<std::string> chosen;
  for (const ScoredTarget& t : picked) chosen.insert(t.instance.id);
  double min_sel = 1e9, max_unsel = -1e9;
  for (const ScoredTarget& t : scored) {
    if (chosen.count(t.instance.id))
      min_sel = std::min(min_sel, t.sim);
    else
      max_unsel = std::max(max_unsel, t.sim);
  }
  CHECK(min_sel >= max_unsel);
}

TEST_CASE("cosine scale invariance keeps sim_only selections unchanged") {
  Rng rng(79);
  std::vector<Instance> targets;
  for (int i = 0; i < 30; ++i)
    targets.push_back(oracle::make_instance(
        "s" + std::to_string(i), "t", {rng.uniform(-1, 1), rng.uniform(-1, 1)}));
  MajorityVoter voter({ProbClassifier(Vec{0.4, -0.2}, 0.1, 1.0)});
  const TargetCentroid c1 = compute_centroid(targets);
  const auto scored1 = score_targets(voter, targets, c1);

  std::vector<Instance> scaled = targets;
  for (Instance& ins : scaled) scale(ins.repr, 4.2);
  const TargetCentroid c2 = compute_centroid(scaled);
  const auto scored2 = score_targets(voter, scaled, c2);

  for (std::size_t i = 0; i < targets.size(); ++i)
    CHECK(scored1[i].sim == doctest::Approx(scored2[i].sim).epsilon(1e-12));
  const SelectionStrategy strat{SelectionKind::sim_only, SortOrder::dsc, 8};
  CHECK(ids_of(select(scored1, strat)) == ids_of(select(scored2, strat)));
}
