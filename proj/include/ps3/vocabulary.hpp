#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ps3 {

using TokenId = int;

// Ordered token table. Content words keep their input order; the reserved
// end-of-sequence sentinel is always appended as the last id, so the content
// alphabet is the dense prefix 0..size()-2.
class Vocabulary {
 public:
  static constexpr std::string_view kEosSentinel = "<eos>";

  Vocabulary() = default;

  int size() const { return static_cast<int>(tokens_.size()); }
  int content_size() const { return size() - 1; }
  TokenId eos_id() const { return size() - 1; }

  bool contains(std::string_view word) const;
  TokenId id_of(std::string_view word) const;  // throws ValidationError on unknown
  const std::string& string_of(TokenId id) const;

  const std::vector<std::string>& tokens() const { return tokens_; }

  friend Vocabulary build_vocabulary(std::span<const std::string> words);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

Vocabulary build_vocabulary(std::span<const std::string> words);
Vocabulary build_vocabulary(std::initializer_list<std::string> words);

// Group of interchangeable word forms for one label; any member satisfies
// the label. Never contains the eos id.
struct DisjunctiveSet {
  std::vector<TokenId> token_ids;  // sorted, unique
  std::string label;

  bool contains(TokenId id) const;
};

DisjunctiveSet word_form_group(const Vocabulary& vocab,
                               std::span<const std::string> group);
DisjunctiveSet word_form_group(const Vocabulary& vocab,
                               std::initializer_list<std::string> group);

}  // namespace ps3
