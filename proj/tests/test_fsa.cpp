#include <doctest.h>

#include <random>

#include "ps3/errors.hpp"
#include "ps3/fsa.hpp"
#include "ps3/fsa_builders.hpp"
#include "ps3/oracle.hpp"
#include "ps3/serialization.hpp"
#include "test_util.hpp"

using namespace ps3;
namespace tu = ps3::testutil;

namespace {

std::vector<PatternItem> gap_pattern(const Vocabulary& v) {
  return {PatternItem::make_word(word_form_group(v, {"a"})),
          PatternItem::make_gap(1),
          PatternItem::make_word(word_form_group(v, {"c"}))};
}

StateId walk(const Fsa& fsa, std::initializer_list<TokenId> tokens) {
  StateId s = fsa.initial;
  for (TokenId t : tokens) {
    s = fsa.step(s, t);
  }
  return s;
}

}  // namespace

TEST_CASE("gap pattern automaton matches the drawn transitions") {
  const Vocabulary v = tu::letters(3);  // a b c
  const TokenId a = 0, b = 1, c = 2;
  const Fsa fsa = build_pattern(v, gap_pattern(v));

  // Four live states plus the reject sink.
  CHECK(fsa.num_states() == 5);

  const StateId s0 = fsa.initial;
  const StateId s1 = fsa.step(s0, a);
  const StateId s2 = fsa.step(s1, b);
  CHECK(s1 != s0);
  CHECK(fsa.step(s2, b) == s2);  // default self-loop on the gap state
  const StateId s3 = fsa.step(s2, c);
  CHECK(fsa.is_accepting(s3));
  CHECK_FALSE(fsa.is_accepting(s0));
  CHECK_FALSE(fsa.is_accepting(s1));
  CHECK_FALSE(fsa.is_accepting(s2));

  CHECK(fsa.accepts(std::vector<TokenId>{a, b, c}));
  CHECK(fsa.accepts(std::vector<TokenId>{a, a, c}));
  CHECK(fsa.accepts(std::vector<TokenId>{a, c, c}));
  CHECK_FALSE(fsa.accepts(std::vector<TokenId>{a, c}));
  CHECK(walk(fsa, {a, c}) == s2);  // ends in the gap state, non-accepting
  CHECK_FALSE(fsa.accepts(std::vector<TokenId>{b, a, c}));
}

TEST_CASE("step is total and rejects bad arguments") {
  const Vocabulary v = tu::letters(2);
  const Fsa uni = make_universal(v.content_size());
  StateId s = uni.initial;
  for (int i = 0; i < 5; ++i) {
    s = uni.step(s, 0);
    CHECK(s == uni.initial);  // one-state automaton never moves
  }
  CHECK_THROWS_AS(uni.step(7, 0), ValidationError);
  CHECK_THROWS_AS(uni.step(0, v.eos_id()), ValidationError);
}

TEST_CASE("accepts on the empty sequence follows the initial state") {
  const Vocabulary v = tu::letters(2);
  CHECK(make_universal(v.content_size()).accepts(std::vector<TokenId>{}));
  const Fsa pattern = build_pattern(
      v, std::vector<PatternItem>{PatternItem::make_word(word_form_group(v, {"a"}))});
  CHECK_FALSE(pattern.accepts(std::vector<TokenId>{}));
  CHECK(pattern.accepts(std::vector<TokenId>{0}));
  CHECK_FALSE(pattern.accepts(std::vector<TokenId>{0, 0}));
}

TEST_CASE("negation automaton reproduces the two-word machine") {
  const Vocabulary v = build_vocabulary({"the", "score", "final", "game"});
  const TokenId the = v.id_of("the"), score = v.id_of("score"), fin = v.id_of("final");
  const Fsa fsa = build_negation(v, std::vector<TokenId>{the, score});

  CHECK(fsa.num_states() == 3);  // two prefix states plus the matched sink
  CHECK_FALSE(fsa.accepts(std::vector<TokenId>{the, score}));
  CHECK_FALSE(fsa.accepts(std::vector<TokenId>{the, the, score}));
  CHECK(fsa.accepts(std::vector<TokenId>{the, fin, score}));
  CHECK(fsa.accepts(std::vector<TokenId>{score, the}));
  CHECK(fsa.accepts(std::vector<TokenId>{}));

  // self-loop on "the" while one "the" is pending
  const StateId s1 = fsa.step(fsa.initial, the);
  CHECK(fsa.step(s1, the) == s1);
}

TEST_CASE("at-least-m-of-n lattice") {
  const Vocabulary v =
      build_vocabulary({"a", "dog", "on", "red", "bike", "bikes", "runs"});
  const std::vector<DisjunctiveSet> sets = {word_form_group(v, {"bike", "bikes"}),
                                            word_form_group(v, {"dog"}),
                                            word_form_group(v, {"red"})};
  const Fsa fsa = build_at_least_m_of_n(v, sets, 2);

  CHECK(fsa.num_states() == 8);
  int accepting = 0;
  for (StateId s = 0; s < fsa.num_states(); ++s) {
    accepting += fsa.is_accepting(s) ? 1 : 0;
  }
  CHECK(accepting == 4);

  auto ids = [&](std::initializer_list<const char*> words) {
    std::vector<TokenId> seq;
    for (const char* w : words) {
      seq.push_back(v.id_of(w));
    }
    return seq;
  };
  CHECK(fsa.accepts(ids({"a", "dog", "on", "red", "bike"})));
  CHECK_FALSE(fsa.accepts(ids({"a", "dog", "runs"})));
  CHECK(fsa.accepts(ids({"red", "bikes"})));

  SUBCASE("degenerate single set") {
    const Fsa one = build_at_least_m_of_n(
        v, std::vector<DisjunctiveSet>{word_form_group(v, {"a"})}, 1);
    CHECK_FALSE(one.accepts(std::vector<TokenId>{}));
    CHECK(one.accepts(ids({"dog", "a"})));
  }

  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(build_at_least_m_of_n(v, sets, 0), ValidationError);
    CHECK_THROWS_AS(build_at_least_m_of_n(v, sets, 4), ValidationError);
    CHECK_THROWS_AS(build_at_least_m_of_n(v, {}, 1), ValidationError);
    std::vector<DisjunctiveSet> too_many(kMaxSets + 1, sets[1]);
    CHECK_THROWS_AS(build_at_least_m_of_n(v, too_many, 2), ValidationError);
  }
}

TEST_CASE("overlapping sets are satisfied simultaneously") {
  const Vocabulary v = build_vocabulary({"x", "y", "z"});
  const std::vector<DisjunctiveSet> sets = {word_form_group(v, {"x", "y"}),
                                            word_form_group(v, {"y", "z"})};
  const Fsa fsa = build_at_least_m_of_n(v, sets, 2);
  CHECK(fsa.accepts(std::vector<TokenId>{v.id_of("y")}));  // one token, both sets
}

TEST_CASE("builders agree with direct predicates on every short string") {
  const Vocabulary v = tu::letters(4);
  const auto sequences = tu::all_sequences(v.content_size(), 6);

  SUBCASE("pattern") {
    const auto items = gap_pattern(v);
    const Fsa fsa = build_pattern(v, items);
    for (const auto& seq : sequences) {
      CHECK(fsa.accepts(seq) == tu::matches_pattern(items, seq));
    }
  }

  SUBCASE("pattern with bounded and min-0 gaps") {
    const std::vector<PatternItem> items = {
        PatternItem::make_gap(0, 2),
        PatternItem::make_word(word_form_group(v, {"b", "c"})),
        PatternItem::make_gap(0),
    };
    const Fsa fsa = build_pattern(v, items);
    for (const auto& seq : sequences) {
      CHECK(fsa.accepts(seq) == tu::matches_pattern(items, seq));
    }
  }

  SUBCASE("negation") {
    const std::vector<TokenId> phrase = {0, 1};  // "a b"
    const Fsa fsa = build_negation(v, phrase);
    for (const auto& seq : sequences) {
      CHECK(fsa.accepts(seq) == !tu::contains_phrase(seq, phrase));
    }
  }

  SUBCASE("at least m of n") {
    const std::vector<DisjunctiveSet> sets = {word_form_group(v, {"a", "b"}),
                                              word_form_group(v, {"c"}),
                                              word_form_group(v, {"b", "d"})};
    for (int m = 1; m <= 3; ++m) {
      const Fsa fsa = build_at_least_m_of_n(v, sets, m);
      for (const auto& seq : sequences) {
        CHECK(fsa.accepts(seq) == tu::satisfies_m_of_n(seq, sets, m));
      }
    }
  }
}

TEST_CASE("satisfied subsets only grow along a prefix") {
  const Vocabulary v = tu::letters(5);
  const std::vector<DisjunctiveSet> sets = {word_form_group(v, {"a", "b"}),
                                            word_form_group(v, {"c"}),
                                            word_form_group(v, {"d", "e"})};
  const Fsa fsa = build_at_least_m_of_n(v, sets, 2);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    StateId s = fsa.initial;
    for (int i = 0; i < 10; ++i) {
      const StateId next = fsa.step(s, static_cast<TokenId>(rng() % 5));
      CHECK((static_cast<unsigned>(s) & static_cast<unsigned>(next)) ==
            static_cast<unsigned>(s));  // subset bits never drop
      s = next;
    }
  }
}

TEST_CASE("intersection") {
  const Vocabulary v = tu::letters(4);
  const auto sequences = tu::all_sequences(v.content_size(), 5);

  SUBCASE("universal automaton is an identity element") {
    const Fsa pattern = build_pattern(v, gap_pattern(v));
    const Fsa both = intersect(pattern, make_universal(v.content_size()));
    for (const auto& seq : sequences) {
      CHECK(both.accepts(seq) == pattern.accepts(seq));
    }
  }

  SUBCASE("mention and negation of the same word contradict") {
    const Fsa mention = build_at_least_m_of_n(
        v, std::vector<DisjunctiveSet>{word_form_group(v, {"a"})}, 1);
    const Fsa never = build_negation(v, std::vector<TokenId>{0});
    const Fsa none = intersect(mention, never);
    for (const auto& seq : sequences) {
      CHECK_FALSE(none.accepts(seq));
    }
    CHECK_FALSE(language_nonempty(none, 10));
  }

  SUBCASE("pattern intersected with mentions-c keeps its language") {
    const Fsa pattern = build_pattern(v, gap_pattern(v));
    const Fsa mention = build_at_least_m_of_n(
        v, std::vector<DisjunctiveSet>{word_form_group(v, {"c"})}, 1);
    const Fsa both = intersect(pattern, mention);
    for (const auto& seq : sequences) {
      CHECK(both.accepts(seq) == pattern.accepts(seq));
    }
  }

  SUBCASE("soundness on random automata") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
      const Fsa a = tu::random_fsa(rng, v.content_size(), 4);
      const Fsa b = tu::random_fsa(rng, v.content_size(), 4);
      const Fsa both = intersect(a, b);
      validate_fsa(both);
      for (const auto& seq : sequences) {
        CHECK(both.accepts(seq) == (a.accepts(seq) && b.accepts(seq)));
      }
    }
  }

  SUBCASE("alphabet mismatch errors") {
    CHECK_THROWS_AS(intersect(make_universal(3), make_universal(4)), ValidationError);
  }
}

TEST_CASE("random automata are total") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Fsa fsa = tu::random_fsa(rng, 5, 6);
    validate_fsa(fsa);
    for (StateId s = 0; s < fsa.num_states(); ++s) {
      for (TokenId t = 0; t < fsa.alphabet_size; ++t) {
        const StateId to = fsa.step(s, t);
        CHECK(to >= 0);
        CHECK(to < fsa.num_states());
      }
    }
  }
}

TEST_CASE("language_nonempty") {
  const Vocabulary v = tu::letters(3);
  CHECK(language_nonempty(make_universal(3), 0));
  const Fsa pattern = build_pattern(v, gap_pattern(v));
  CHECK_FALSE(language_nonempty(pattern, 2));
  CHECK(language_nonempty(pattern, 3));
}

TEST_CASE("fsa json round trip") {
  const Vocabulary v = tu::letters(4);
  const Fsa fsa = build_pattern(v, gap_pattern(v));
  const Json j = fsa_to_json(fsa, v);
  const Fsa back = fsa_from_json(j, v);
  CHECK(fsa_to_json(back, v).dump(2) == j.dump(2));
  const auto sequences = tu::all_sequences(v.content_size(), 5);
  for (const auto& seq : sequences) {
    CHECK(back.accepts(seq) == fsa.accepts(seq));
  }
}

TEST_CASE("constraint compilation dispatches on type") {
  const Vocabulary v = build_vocabulary({"bike", "bikes", "dog", "red", "the", "score"});
  const Json spec = Json::parse(R"({
    "type": "at_least_m_of_n", "m": 2,
    "groups": [["bike", "bikes"], ["dog"], ["red"]]
  })");
  const Fsa fsa = compile_constraint(spec, v);
  CHECK(fsa.num_states() == 8);

  const Json inter = Json::parse(R"({
    "type": "intersect",
    "of": [
      {"type": "negation", "phrase": ["the", "score"]},
      {"type": "pattern", "items": [{"gap": {"min": 0}}, {"word": ["dog"]}]}
    ]
  })");
  const Fsa f2 = compile_constraint(inter, v);
  auto ids = [&](std::initializer_list<const char*> words) {
    std::vector<TokenId> seq;
    for (const char* w : words) {
      seq.push_back(v.id_of(w));
    }
    return seq;
  };
  CHECK(f2.accepts(ids({"red", "dog"})));
  CHECK_FALSE(f2.accepts(ids({"the", "score", "dog"})));
  CHECK_FALSE(f2.accepts(ids({"dog", "red"})));  // must end with dog

  CHECK_THROWS_AS(compile_constraint(Json::parse(R"({"type":"nope"})"), v),
                  ValidationError);
}
