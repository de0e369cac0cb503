#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ps3/fsa.hpp"
#include "ps3/vocabulary.hpp"

namespace ps3 {

// One element of a partial-sequence pattern: either exactly one token drawn
// from a disjunctive set, or a gap of arbitrary tokens whose length is
// min_len (0 or 1) up to max_len (unbounded when absent).
struct PatternItem {
  enum class Kind { kWord, kGap };
  Kind kind = Kind::kWord;
  DisjunctiveSet word;                 // kWord
  int gap_min = 1;                     // kGap: 0 or 1
  std::optional<int> gap_max;          // kGap: nullopt = unbounded

  static PatternItem make_word(DisjunctiveSet ds);
  static PatternItem make_gap(int min_len, std::optional<int> max_len = std::nullopt);
};

// Automaton accepting exactly the sequences that match the concatenation of
// the items. Built from a small epsilon-NFA by subset construction; no
// minimization pass, but unreachable states are pruned and per-state edges
// are compressed onto a default target.
Fsa build_pattern(const Vocabulary& vocab, std::span<const PatternItem> items);

// Automaton accepting exactly the sequences that do NOT contain the phrase
// as a contiguous subsequence: the complement of a substring matcher built
// with failure transitions, with the matched state as an absorbing sink.
Fsa build_negation(const Vocabulary& vocab, std::span<const TokenId> phrase);

// Subset-lattice automaton over which of the n disjunctive sets have been
// satisfied so far; a state is accepting iff at least m sets are satisfied.
// A token belonging to several sets satisfies all of them at once; all other
// tokens are default self-loops. 2^n states, n capped at kMaxSets.
inline constexpr int kMaxSets = 12;
Fsa build_at_least_m_of_n(const Vocabulary& vocab,
                          std::span<const DisjunctiveSet> sets, int m);

// Product automaton accepting the intersection language, restricted to
// states reachable from the initial pair.
Fsa intersect(const Fsa& a, const Fsa& b);

}  // namespace ps3
