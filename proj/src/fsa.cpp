#include "ps3/fsa.hpp"

#include <deque>
#include <string>

#include "ps3/errors.hpp"

namespace ps3 {

StateId Fsa::step(StateId state, TokenId token) const {
  if (state < 0 || state >= num_states()) {
    throw ValidationError("step: state " + std::to_string(state) + " out of range");
  }
  if (token < 0 || token >= alphabet_size) {
    throw ValidationError("step: token " + std::to_string(token) +
                          " is not a content token");
  }
  const auto& edges = labeled[static_cast<size_t>(state)];
  auto it = edges.find(token);
  return it != edges.end() ? it->second : default_target[static_cast<size_t>(state)];
}

bool Fsa::accepts(std::span<const TokenId> seq) const {
  StateId s = initial;
  for (TokenId t : seq) {
    s = step(s, t);
  }
  return is_accepting(s);
}

void validate_fsa(const Fsa& fsa) {
  const int n = fsa.num_states();
  if (n <= 0) {
    throw ValidationError("fsa has no states");
  }
  if (fsa.alphabet_size <= 0) {
    throw ValidationError("fsa alphabet is empty");
  }
  if (fsa.initial < 0 || fsa.initial >= n) {
    throw ValidationError("fsa initial state out of range");
  }
  if (static_cast<int>(fsa.accepting.size()) != n ||
      static_cast<int>(fsa.labeled.size()) != n) {
    throw ValidationError("fsa per-state tables have inconsistent sizes");
  }
  for (int s = 0; s < n; ++s) {
    StateId d = fsa.default_target[static_cast<size_t>(s)];
    if (d < 0 || d >= n) {
      throw ValidationError("fsa default target out of range at state " +
                            std::to_string(s));
    }
    for (const auto& [tok, to] : fsa.labeled[static_cast<size_t>(s)]) {
      if (tok < 0 || tok >= fsa.alphabet_size) {
        throw ValidationError("fsa edge label out of alphabet at state " +
                              std::to_string(s));
      }
      if (to < 0 || to >= n) {
        throw ValidationError("fsa edge target out of range at state " +
                              std::to_string(s));
      }
    }
  }
}

Fsa make_universal(int alphabet_size) {
  Fsa fsa;
  fsa.alphabet_size = alphabet_size;
  fsa.initial = 0;
  fsa.accepting = {true};
  fsa.labeled.resize(1);
  fsa.default_target = {0};
  return fsa;
}

bool language_nonempty(const Fsa& fsa, int max_len) {
  if (max_len < 0) {
    throw ValidationError("language_nonempty: negative max_len");
  }
  std::vector<bool> seen(static_cast<size_t>(fsa.num_states()), false);
  std::deque<StateId> frontier = {fsa.initial};
  seen[static_cast<size_t>(fsa.initial)] = true;
  for (int depth = 0; depth <= max_len; ++depth) {
    std::deque<StateId> next;
    for (StateId s : frontier) {
      if (fsa.is_accepting(s)) {
        return true;
      }
      if (depth == max_len) {
        continue;
      }
      auto visit = [&](StateId to) {
        if (!seen[static_cast<size_t>(to)]) {
          seen[static_cast<size_t>(to)] = true;
          next.push_back(to);
        }
      };
      visit(fsa.default_target[static_cast<size_t>(s)]);
      for (const auto& [tok, to] : fsa.labeled[static_cast<size_t>(s)]) {
        visit(to);
      }
    }
    frontier = std::move(next);
    if (frontier.empty()) {
      break;
    }
  }
  return false;
}

}  // namespace ps3
