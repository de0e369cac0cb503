#include "ps3/fsa_builders.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <utility>

#include "ps3/errors.hpp"

namespace ps3 {

PatternItem PatternItem::make_word(DisjunctiveSet ds) {
  PatternItem item;
  item.kind = Kind::kWord;
  item.word = std::move(ds);
  return item;
}

PatternItem PatternItem::make_gap(int min_len, std::optional<int> max_len) {
  if (min_len != 0 && min_len != 1) {
    throw ValidationError("gap min length must be 0 or 1");
  }
  if (max_len && *max_len < min_len) {
    throw ValidationError("gap max length below min length");
  }
  PatternItem item;
  item.kind = Kind::kGap;
  item.gap_min = min_len;
  item.gap_max = max_len;
  return item;
}

namespace {

// Epsilon-NFA scratch structure for pattern compilation. Labeled edges carry
// either an explicit token set or the whole content alphabet.
struct Nfa {
  struct Edge {
    bool sigma = false;              // matches every content token
    std::vector<TokenId> tokens;     // sorted; used when !sigma
    int to = 0;
  };
  std::vector<std::vector<Edge>> edges;
  std::vector<std::vector<int>> eps;
  int final_state = 0;

  int add_state() {
    edges.emplace_back();
    eps.emplace_back();
    return static_cast<int>(edges.size()) - 1;
  }
};

void eps_closure(const Nfa& nfa, std::vector<int>& states) {
  std::deque<int> work(states.begin(), states.end());
  std::set<int> seen(states.begin(), states.end());
  while (!work.empty()) {
    int s = work.front();
    work.pop_front();
    for (int t : nfa.eps[static_cast<size_t>(s)]) {
      if (seen.insert(t).second) {
        work.push_back(t);
      }
    }
  }
  states.assign(seen.begin(), seen.end());
}

std::vector<int> nfa_move(const Nfa& nfa, const std::vector<int>& states, TokenId token) {
  std::set<int> out;
  for (int s : states) {
    for (const auto& e : nfa.edges[static_cast<size_t>(s)]) {
      if (e.sigma || std::binary_search(e.tokens.begin(), e.tokens.end(), token)) {
        out.insert(e.to);
      }
    }
  }
  return {out.begin(), out.end()};
}

// Pick the most frequent target as the per-state default and keep the rest
// as labeled edges. Ties go to the smallest target id.
void compress_row(const std::vector<StateId>& target_per_token, Fsa& fsa, StateId state) {
  std::map<StateId, int> freq;
  for (StateId t : target_per_token) {
    ++freq[t];
  }
  StateId def = target_per_token.front();
  int best = -1;
  for (const auto& [t, count] : freq) {
    if (count > best) {
      best = count;
      def = t;
    }
  }
  fsa.default_target[static_cast<size_t>(state)] = def;
  auto& labels = fsa.labeled[static_cast<size_t>(state)];
  for (TokenId tok = 0; tok < static_cast<TokenId>(target_per_token.size()); ++tok) {
    if (target_per_token[static_cast<size_t>(tok)] != def) {
      labels.emplace(tok, target_per_token[static_cast<size_t>(tok)]);
    }
  }
}

}  // namespace

Fsa build_pattern(const Vocabulary& vocab, std::span<const PatternItem> items) {
  if (items.empty()) {
    throw ValidationError("pattern has no items");
  }
  const int alphabet = vocab.content_size();
  if (alphabet <= 0) {
    throw ValidationError("vocabulary has no content tokens");
  }

  Nfa nfa;
  int cursor = nfa.add_state();
  for (const auto& item : items) {
    if (item.kind == PatternItem::Kind::kWord) {
      if (item.word.token_ids.empty()) {
        throw ValidationError("pattern word item has an empty disjunctive set");
      }
      int next = nfa.add_state();
      nfa.edges[static_cast<size_t>(cursor)].push_back(
          {false, item.word.token_ids, next});
      cursor = next;
    } else if (!item.gap_max) {
      // Unbounded gap: one mandatory sigma step into a sigma self-loop,
      // skippable entirely when min_len is 0.
      int loop = nfa.add_state();
      int exit = nfa.add_state();
      nfa.edges[static_cast<size_t>(cursor)].push_back({true, {}, loop});
      nfa.edges[static_cast<size_t>(loop)].push_back({true, {}, loop});
      nfa.eps[static_cast<size_t>(loop)].push_back(exit);
      if (item.gap_min == 0) {
        nfa.eps[static_cast<size_t>(cursor)].push_back(exit);
      }
      cursor = exit;
    } else {
      // Bounded gap: a sigma chain with epsilon exits from every position
      // at or beyond min_len.
      int exit = nfa.add_state();
      int pos = cursor;
      if (item.gap_min == 0) {
        nfa.eps[static_cast<size_t>(pos)].push_back(exit);
      }
      for (int k = 1; k <= *item.gap_max; ++k) {
        int next = nfa.add_state();
        nfa.edges[static_cast<size_t>(pos)].push_back({true, {}, next});
        nfa.eps[static_cast<size_t>(next)].push_back(exit);
        pos = next;
      }
      cursor = exit;
    }
  }
  nfa.final_state = cursor;

  // Subset construction over the concrete alphabet.
  Fsa fsa;
  fsa.alphabet_size = alphabet;
  std::map<std::vector<int>, StateId> ids;
  std::deque<std::vector<int>> work;

  auto intern = [&](std::vector<int> set) -> StateId {
    auto it = ids.find(set);
    if (it != ids.end()) {
      return it->second;
    }
    StateId id = static_cast<StateId>(ids.size());
    ids.emplace(set, id);
    fsa.accepting.push_back(std::binary_search(set.begin(), set.end(), nfa.final_state));
    fsa.labeled.emplace_back();
    fsa.default_target.push_back(0);
    work.push_back(std::move(set));
    return id;
  };

  std::vector<int> start = {0};
  eps_closure(nfa, start);
  fsa.initial = intern(std::move(start));

  while (!work.empty()) {
    std::vector<int> current = std::move(work.front());
    work.pop_front();
    StateId from = ids.at(current);
    std::vector<StateId> row(static_cast<size_t>(alphabet));
    for (TokenId tok = 0; tok < alphabet; ++tok) {
      std::vector<int> next = nfa_move(nfa, current, tok);
      eps_closure(nfa, next);
      row[static_cast<size_t>(tok)] = intern(std::move(next));
    }
    compress_row(row, fsa, from);
  }
  return fsa;
}

Fsa build_negation(const Vocabulary& vocab, std::span<const TokenId> phrase) {
  if (phrase.empty()) {
    throw ValidationError("negation phrase is empty");
  }
  const int alphabet = vocab.content_size();
  for (TokenId t : phrase) {
    if (t < 0 || t >= alphabet) {
      throw ValidationError("negation phrase contains a non-content token");
    }
  }
  const int m = static_cast<int>(phrase.size());

  // Substring-match automaton: state j = length of the longest phrase prefix
  // matching a suffix of the input. Transitions for tokens outside the
  // phrase alphabet all fall back to state 0, which the default edge covers.
  std::set<TokenId> phrase_alphabet(phrase.begin(), phrase.end());
  std::map<TokenId, std::vector<StateId>> next;  // token -> per-state target
  for (TokenId c : phrase_alphabet) {
    next[c].assign(static_cast<size_t>(m), 0);
  }
  next[phrase[0]][0] = 1;
  int restart = 0;
  for (int j = 1; j < m; ++j) {
    for (TokenId c : phrase_alphabet) {
      next[c][static_cast<size_t>(j)] = next[c][static_cast<size_t>(restart)];
    }
    next[phrase[static_cast<size_t>(j)]][static_cast<size_t>(j)] = j + 1;
    restart = next[phrase[static_cast<size_t>(j)]][static_cast<size_t>(restart)];
  }

  Fsa fsa;
  fsa.alphabet_size = alphabet;
  fsa.initial = 0;
  fsa.accepting.assign(static_cast<size_t>(m) + 1, true);
  fsa.accepting[static_cast<size_t>(m)] = false;  // matched: complement rejects
  fsa.labeled.resize(static_cast<size_t>(m) + 1);
  fsa.default_target.assign(static_cast<size_t>(m) + 1, 0);
  for (int j = 0; j < m; ++j) {
    for (const auto& [c, row] : next) {
      StateId to = row[static_cast<size_t>(j)];
      if (to != 0) {
        fsa.labeled[static_cast<size_t>(j)].emplace(c, to);
      }
    }
  }
  fsa.default_target[static_cast<size_t>(m)] = m;  // absorbing sink
  return fsa;
}

Fsa build_at_least_m_of_n(const Vocabulary& vocab,
                          std::span<const DisjunctiveSet> sets, int m) {
  const int n = static_cast<int>(sets.size());
  if (n == 0) {
    throw ValidationError("at_least_m_of_n: no disjunctive sets");
  }
  if (n > kMaxSets) {
    throw ValidationError("at_least_m_of_n: " + std::to_string(n) +
                          " sets exceeds the cap of " + std::to_string(kMaxSets));
  }
  if (m < 1 || m > n) {
    throw ValidationError("at_least_m_of_n: m out of range");
  }
  const int alphabet = vocab.content_size();

  std::map<TokenId, unsigned> mask;  // token -> sets it satisfies
  for (int i = 0; i < n; ++i) {
    if (sets[static_cast<size_t>(i)].token_ids.empty()) {
      throw ValidationError("at_least_m_of_n: empty disjunctive set");
    }
    for (TokenId t : sets[static_cast<size_t>(i)].token_ids) {
      if (t < 0 || t >= alphabet) {
        throw ValidationError("at_least_m_of_n: token outside content alphabet");
      }
      mask[t] |= 1u << i;
    }
  }

  const int num_states = 1 << n;
  Fsa fsa;
  fsa.alphabet_size = alphabet;
  fsa.initial = 0;
  fsa.accepting.resize(static_cast<size_t>(num_states));
  fsa.labeled.resize(static_cast<size_t>(num_states));
  fsa.default_target.resize(static_cast<size_t>(num_states));
  for (unsigned state = 0; state < static_cast<unsigned>(num_states); ++state) {
    fsa.accepting[state] = std::popcount(state) >= m;
    fsa.default_target[state] = static_cast<StateId>(state);
    for (const auto& [tok, bits] : mask) {
      unsigned to = state | bits;
      if (to != state) {
        fsa.labeled[state].emplace(tok, static_cast<StateId>(to));
      }
    }
  }
  return fsa;
}

Fsa intersect(const Fsa& a, const Fsa& b) {
  if (a.alphabet_size != b.alphabet_size) {
    throw ValidationError("intersect: automata built over different vocabularies");
  }
  const int alphabet = a.alphabet_size;

  Fsa fsa;
  fsa.alphabet_size = alphabet;
  std::map<std::pair<StateId, StateId>, StateId> ids;
  std::deque<std::pair<StateId, StateId>> work;

  auto intern = [&](std::pair<StateId, StateId> pair) -> StateId {
    auto it = ids.find(pair);
    if (it != ids.end()) {
      return it->second;
    }
    StateId id = static_cast<StateId>(ids.size());
    ids.emplace(pair, id);
    fsa.accepting.push_back(a.is_accepting(pair.first) && b.is_accepting(pair.second));
    fsa.labeled.emplace_back();
    fsa.default_target.push_back(0);
    work.push_back(pair);
    return id;
  };

  fsa.initial = intern({a.initial, b.initial});
  while (!work.empty()) {
    auto [pa, pb] = work.front();
    work.pop_front();
    StateId from = ids.at({pa, pb});

    std::set<TokenId> interesting;
    for (const auto& [tok, to] : a.labeled[static_cast<size_t>(pa)]) {
      interesting.insert(tok);
    }
    for (const auto& [tok, to] : b.labeled[static_cast<size_t>(pb)]) {
      interesting.insert(tok);
    }
    std::pair<StateId, StateId> default_pair = {
        a.default_target[static_cast<size_t>(pa)],
        b.default_target[static_cast<size_t>(pb)]};
    // Interning the default first keeps state numbering independent of which
    // labeled edges happen to share it.
    StateId def = intern(default_pair);
    fsa.default_target[static_cast<size_t>(from)] = def;
    for (TokenId tok : interesting) {
      std::pair<StateId, StateId> to_pair = {a.step(pa, tok), b.step(pb, tok)};
      if (to_pair != default_pair) {
        fsa.labeled[static_cast<size_t>(from)].emplace(tok, intern(to_pair));
      }
    }
  }
  return fsa;
}

}  // namespace ps3
