#include <doctest.h>

#include "ps3/errors.hpp"
#include "ps3/vocabulary.hpp"

using namespace ps3;

TEST_CASE("vocabulary construction appends eos last") {
  const Vocabulary v = build_vocabulary({"a", "b", "c"});
  CHECK(v.size() == 4);
  CHECK(v.eos_id() == 3);
  CHECK(v.content_size() == 3);
  CHECK(v.string_of(3) == Vocabulary::kEosSentinel);
}

TEST_CASE("vocabulary keeps input order") {
  const Vocabulary v = build_vocabulary({"bike", "bikes", "dog"});
  CHECK(v.id_of("bike") == 0);
  CHECK(v.id_of("bikes") == 1);
  CHECK(v.id_of("dog") == 2);
  CHECK(v.eos_id() == 3);
}

TEST_CASE("vocabulary rejects bad input") {
  CHECK_THROWS_AS(build_vocabulary({"a", "a"}), ValidationError);
  CHECK_THROWS_AS(build_vocabulary(std::initializer_list<std::string>{}), ValidationError);
  CHECK_THROWS_AS(build_vocabulary({"a", ""}), ValidationError);
  CHECK_THROWS_AS(build_vocabulary({"a", std::string(Vocabulary::kEosSentinel)}),
                  ValidationError);
}

TEST_CASE("id/string round trip") {
  const Vocabulary v = build_vocabulary({"a", "bb", "ccc", "dddd"});
  for (TokenId id = 0; id < v.size(); ++id) {
    CHECK(v.id_of(v.string_of(id)) == id);
  }
  CHECK_THROWS_AS(v.id_of("missing"), ValidationError);
  CHECK_THROWS_AS(v.string_of(99), ValidationError);
}

TEST_CASE("word form groups") {
  const Vocabulary v = build_vocabulary({"bike", "bikes", "biked", "biking", "dog"});

  SUBCASE("four word forms map to four ids") {
    const DisjunctiveSet ds = word_form_group(v, {"bike", "bikes", "biked", "biking"});
    CHECK(ds.token_ids.size() == 4);
    CHECK(ds.contains(v.id_of("biked")));
    CHECK_FALSE(ds.contains(v.id_of("dog")));
    CHECK_FALSE(ds.contains(v.eos_id()));
  }

  SUBCASE("singleton") {
    const DisjunctiveSet ds = word_form_group(v, {"dog"});
    CHECK(ds.token_ids == std::vector<TokenId>{v.id_of("dog")});
  }

  SUBCASE("unknown word errors") {
    CHECK_THROWS_AS(word_form_group(v, {"unicorn"}), ValidationError);
  }

  SUBCASE("empty group errors") {
    CHECK_THROWS_AS(word_form_group(v, std::initializer_list<std::string>{}),
                    ValidationError);
  }

  SUBCASE("eos sentinel is not a content word") {
    CHECK_THROWS_AS(word_form_group(v, {std::string(Vocabulary::kEosSentinel)}),
                    ValidationError);
  }
}
