#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>

#include "sdds/generator.hpp"

using Catch::Matchers::WithinRel;
using namespace sdds;

namespace {

double entry(const Generator& g, std::size_t from, std::size_t to) {
  return g.matrix()(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to));
}

}  // namespace

TEST_CASE("builder assembles and freezes a generator", "[generator]") {
  Generator g = [] {
    GeneratorBuilder b(2);
    b.add(0, 1, 0.75).add(1, 0, 0.25);
    b.add(0, 0, 123.0);  // self-loop: dropped
    b.add(1, 0, 0.0);    // zero rate: dropped
    return std::move(b).build();
  }();
  CHECK(g.dim() == 2);
  CHECK(entry(g, 0, 1) == 0.75);
  CHECK(entry(g, 1, 0) == 0.25);
  CHECK(entry(g, 0, 0) == -0.75);
  CHECK(g.row_sum(0) == 0.0);
  CHECK(g.row_sum(1) == 0.0);
  CHECK(g.max_exit_rate() == 0.75);
  REQUIRE(g.transitions().size() == 2);
  CHECK(g.transitions()[0] == Generator::Transition{0, 1, 0.75});

  Generator dup = [] {
    GeneratorBuilder b(3);
    b.add(0, 2, 0.5).add(0, 1, 1.0).add(0, 2, 0.25);  // duplicate cell accumulates
    return std::move(b).build();
  }();
  CHECK(entry(dup, 0, 2) == 0.75);
  CHECK(entry(dup, 0, 1) == 1.0);

  GeneratorBuilder bad(2);
  CHECK_THROWS_AS(bad.add(0, 2, 1.0), std::out_of_range);
  CHECK_THROWS_AS(bad.add(0, 1, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(bad.add(0, 1, std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(GeneratorBuilder(0), std::invalid_argument);
}

TEST_CASE("markov generator carries the closed-form rates", "[generator]") {
  const Generator g = build_generator(case1_params(), ModelKind::markov, 1);
  REQUIRE(g.dim() == 4);
  // order [S1, S2, S3, S4]
  CHECK(entry(g, 0, 2) == 1.0);                                     // creation
  CHECK(entry(g, 1, 0) == 5e-3);                                    // removal
  CHECK(entry(g, 1, 2) == 1.0);                                     // update
  CHECK(entry(g, 1, 3) == 2e-8);                                    // erroneous removal
  CHECK_THAT(entry(g, 2, 1), WithinRel(90.479214711370904, 1e-13));  // all receivers reached
  CHECK_THAT(entry(g, 2, 3), WithinRel(9.5207852886290958, 1e-13));  // someone missed
  CHECK(entry(g, 2, 0) == 5e-3);
  CHECK_THAT(entry(g, 3, 1), WithinRel(0.19997999099429586, 1e-13));  // refresh repairs all
  CHECK(entry(g, 3, 2) == 1.0);
  CHECK(entry(g, 3, 0) == 5e-3);

  const Generator r = build_generator(case1_params(true), ModelKind::markov, 1);
  CHECK_THAT(entry(r, 3, 1), WithinRel(49.994997748573966, 1e-13));  // 2D retransmission cycle

  CHECK_THROWS_AS(build_generator(case1_params(), ModelKind::erlang_full, 0),
                  std::invalid_argument);
  SddsParams bad = case1_params();
  bad.lambda_u = 0.0;
  CHECK_THROWS_AS(build_generator(bad, ModelKind::markov, 1), std::invalid_argument);
}

TEST_CASE("row sums vanish exactly for every model", "[generator]") {
  for (const SddsParams& base : {case1_params(), case2_params()}) {
    for (bool rel : {false, true}) {
      SddsParams p = base;
      p.reliable = rel;
      for (ModelKind kind :
           {ModelKind::markov, ModelKind::erlang_full, ModelKind::erlang_simplified}) {
        for (int k : {1, 10, 57}) {
          const Generator g = build_generator(p, kind, k);
          for (std::size_t i = 0; i < g.dim(); ++i) CHECK(g.row_sum(i) == 0.0);
          for (const Generator::Transition& t : g.transitions()) CHECK(t.rate > 0.0);
        }
      }
    }
  }
}

TEST_CASE("the three models coincide exactly at k=1", "[generator]") {
  for (const SddsParams& base : {case1_params(), case2_params()}) {
    for (bool rel : {false, true}) {
      SddsParams p = base;
      p.reliable = rel;
      const Generator gm = build_generator(p, ModelKind::markov, 1);
      const Generator gf = build_generator(p, ModelKind::erlang_full, 1);
      const Generator gs = build_generator(p, ModelKind::erlang_simplified, 1);
      CHECK((gm.matrix() - gf.matrix()).cwiseAbs().maxCoeff() == 0.0);
      CHECK((gm.matrix() - gs.matrix()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  // the Markov model ignores k altogether
  const Generator g17 = build_generator(case2_params(), ModelKind::markov, 17);
  const Generator g1 = build_generator(case2_params(), ModelKind::markov, 1);
  CHECK((g17.matrix() - g1.matrix()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("phase chains advance, split, and exit as designed", "[generator]") {
  const SddsParams p = case2_params();
  const int k = 6;
  const double mu3 = k / p.transfer_delay;
  const double mu4 = k / p.refresh_period;
  const auto s3 = [&](int j) { return static_cast<std::size_t>(1 + j); };
  const auto s4 = [&](int j) { return static_cast<std::size_t>(1 + k + j); };

  const Generator full = build_generator(p, ModelKind::erlang_full, k);
  const Generator simp = build_generator(p, ModelKind::erlang_simplified, k);

  SECTION("advancement and completion split") {
    for (const Generator* g : {&full, &simp}) {
      CHECK(entry(*g, s3(2), s3(3)) == mu3);
      CHECK(entry(*g, s4(5), s4(6)) == mu4);
      // the completion split conserves the chain rate
      CHECK_THAT(entry(*g, s3(k), 1) + entry(*g, s3(k), s4(1)), WithinRel(mu3, 1e-15));
      CHECK_THAT(entry(*g, s4(k), 1) + entry(*g, s4(k), s4(1)), WithinRel(mu4, 1e-15));
    }
  }

  SECTION("interrupt exits: everywhere in the full model, entry-only in the simplified") {
    CHECK(entry(full, s3(4), 0) == p.lambda_d);
    CHECK(entry(full, s3(4), s3(1)) == p.lambda_u);
    CHECK(entry(full, s4(3), 0) == p.lambda_d);
    CHECK(entry(full, s4(3), s3(1)) == p.lambda_u);
    // total exit rate of an interior full phase is mu + lambda_u + lambda_d
    CHECK_THAT(-entry(full, s3(4), s3(4)), WithinRel(mu3 + p.lambda_u + p.lambda_d, 1e-14));

    CHECK(entry(simp, s3(4), 0) == 0.0);
    CHECK(entry(simp, s3(4), s3(1)) == 0.0);
    CHECK(entry(simp, s4(3), 0) == 0.0);
    CHECK(entry(simp, s4(3), s3(1)) == 0.0);
    CHECK(-entry(simp, s3(4), s3(4)) == mu3);  // uninterruptible interior phase
    CHECK(-entry(simp, s4(3), s4(3)) == mu4);
    // entry phases keep their exits in both models
    CHECK(entry(simp, s3(1), 0) == p.lambda_d);
    CHECK(entry(simp, s4(1), 0) == p.lambda_d);
    CHECK(entry(simp, s4(1), s3(1)) == p.lambda_u);
  }
}

TEST_CASE("chain 4 is disconnected when nothing can be lost", "[generator]") {
  SddsParams p = case1_params();
  p.p_loss = 0.0;
  p.lambda_f = 0.0;
  const int k = 5;
  const Generator g = build_generator(p, ModelKind::erlang_full, k);
  const std::size_t chain4_begin = 2 + static_cast<std::size_t>(k);
  for (const Generator::Transition& t : g.transitions())
    if (t.from < chain4_begin) CHECK(t.to < chain4_begin);  // no edges lead into chain 4
  for (std::size_t i = 0; i < g.dim(); ++i) CHECK(g.row_sum(i) == 0.0);
}
