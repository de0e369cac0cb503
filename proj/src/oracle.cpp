#include "ps3/oracle.hpp"

namespace ps3 {

std::vector<std::vector<TokenId>> enumerate_language(const Fsa& fsa,
                                                     const Vocabulary& vocab,
                                                     int max_len, size_t limit) {
  if (fsa.alphabet_size != vocab.content_size()) {
    throw ValidationError("automaton and vocabulary disagree on alphabet");
  }
  oracle_detail::check_guard(vocab.content_size(), max_len);

  std::vector<std::vector<TokenId>> accepted;
  struct Node {
    std::vector<TokenId> tokens;
    StateId state;
  };
  std::vector<Node> frontier = {{{}, fsa.initial}};
  for (int depth = 0; depth <= max_len; ++depth) {
    for (const Node& node : frontier) {
      if (fsa.is_accepting(node.state)) {
        accepted.push_back(node.tokens);
        if (limit != 0 && accepted.size() >= limit) {
          return accepted;
        }
      }
    }
    if (depth == max_len) {
      break;
    }
    std::vector<Node> next;
    next.reserve(frontier.size() * static_cast<size_t>(fsa.alphabet_size));
    for (const Node& node : frontier) {
      for (TokenId tok = 0; tok < fsa.alphabet_size; ++tok) {
        Node child{node.tokens, fsa.step(node.state, tok)};
        child.tokens.push_back(tok);
        next.push_back(std::move(child));
      }
    }
    frontier = std::move(next);
  }
  return accepted;
}

}  // namespace ps3
