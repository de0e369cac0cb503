#include "ps3/vocabulary.hpp"

#include <algorithm>

#include "ps3/errors.hpp"

namespace ps3 {

bool Vocabulary::contains(std::string_view word) const {
  return index_.find(std::string(word)) != index_.end();
}

TokenId Vocabulary::id_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) {
    throw ValidationError("unknown word: '" + std::string(word) + "'");
  }
  return it->second;
}

const std::string& Vocabulary::string_of(TokenId id) const {
  if (id < 0 || id >= size()) {
    throw ValidationError("token id out of range: " + std::to_string(id));
  }
  return tokens_[static_cast<size_t>(id)];
}

Vocabulary build_vocabulary(std::span<const std::string> words) {
  if (words.empty()) {
    throw ValidationError("vocabulary word list is empty");
  }
  Vocabulary v;
  v.tokens_.reserve(words.size() + 1);
  for (const auto& w : words) {
    if (w.empty()) {
      throw ValidationError("vocabulary contains an empty word");
    }
    if (w == Vocabulary::kEosSentinel) {
      throw ValidationError("'" + std::string(Vocabulary::kEosSentinel) +
                            "' is reserved and cannot be a content word");
    }
    auto [it, inserted] =
        v.index_.emplace(w, static_cast<TokenId>(v.tokens_.size()));
    if (!inserted) {
      throw ValidationError("duplicate word: '" + w + "'");
    }
    v.tokens_.push_back(w);
  }
  v.index_.emplace(std::string(Vocabulary::kEosSentinel),
                   static_cast<TokenId>(v.tokens_.size()));
  v.tokens_.emplace_back(Vocabulary::kEosSentinel);
  return v;
}

Vocabulary build_vocabulary(std::initializer_list<std::string> words) {
  return build_vocabulary(std::span<const std::string>(words.begin(), words.size()));
}

bool DisjunctiveSet::contains(TokenId id) const {
  return std::binary_search(token_ids.begin(), token_ids.end(), id);
}

DisjunctiveSet word_form_group(const Vocabulary& vocab,
                               std::span<const std::string> group) {
  if (group.empty()) {
    throw ValidationError("word-form group is empty");
  }
  DisjunctiveSet ds;
  ds.label = group.front();
  ds.token_ids.reserve(group.size());
  for (const auto& w : group) {
    TokenId id = vocab.id_of(w);
    if (id == vocab.eos_id()) {
      throw ValidationError("eos sentinel cannot appear in a word-form group");
    }
    ds.token_ids.push_back(id);
  }
  std::sort(ds.token_ids.begin(), ds.token_ids.end());
  ds.token_ids.erase(std::unique(ds.token_ids.begin(), ds.token_ids.end()),
                     ds.token_ids.end());
  return ds;
}

DisjunctiveSet word_form_group(const Vocabulary& vocab,
                               std::initializer_list<std::string> group) {
  return word_form_group(vocab, std::span<const std::string>(group.begin(), group.size()));
}

}  // namespace ps3
