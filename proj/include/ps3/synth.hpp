#pragma once

#include <cstdint>
#include <filesystem>

namespace ps3 {

// Synthetic novel-word benchmark: a fixed stochastic grammar
// (det color noun verb [adverb]) over ~40 words, context vectors correlated
// with the noun and color, and four held-out noun groups. Sentences that
// mention a held-out noun are removed from the complete-caption file and
// appear in the partial file as label groups only.
struct SynthPaths {
  std::filesystem::path vocab;
  std::filesystem::path train_complete;
  std::filesystem::path train_partial;
  std::filesystem::path eval_indomain;
  std::filesystem::path mention_spec;
};

inline constexpr int kSynthContextDim = 14;  // 10 noun groups + 4 colors

SynthPaths generate_synthetic_corpus(std::uint64_t seed,
                                     const std::filesystem::path& out_dir);

}  // namespace ps3
