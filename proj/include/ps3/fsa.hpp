#pragma once

#include <map>
#include <span>
#include <vector>

#include "ps3/vocabulary.hpp"

namespace ps3 {

using StateId = int;

// Deterministic finite state automaton over the content alphabet
// 0..alphabet_size-1 (eos is never an edge label; the decoder handles it).
// Each state has a sparse map of labeled edges plus a default target that
// absorbs every token not in the map, so the transition function is total
// without materializing |alphabet| edges per state.
struct Fsa {
  int alphabet_size = 0;
  StateId initial = 0;
  std::vector<bool> accepting;                   // indexed by state
  std::vector<std::map<TokenId, StateId>> labeled;
  std::vector<StateId> default_target;

  int num_states() const { return static_cast<int>(default_target.size()); }

  StateId step(StateId state, TokenId token) const;
  bool accepts(std::span<const TokenId> seq) const;
  bool is_accepting(StateId state) const { return accepting[static_cast<size_t>(state)]; }
};

// Throws ValidationError if any structural invariant is broken.
void validate_fsa(const Fsa& fsa);

// Single accepting state with a default self-loop; accepts every sequence.
Fsa make_universal(int alphabet_size);

// True iff an accepting state is reachable from the initial state in at most
// max_len steps. Used to reject unsatisfiable constraints before decoding.
bool language_nonempty(const Fsa& fsa, int max_len);

}  // namespace ps3
