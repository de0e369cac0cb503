#pragma once

#include <filesystem>
#include <vector>

#include "ps3/decode.hpp"
#include "ps3/eval.hpp"
#include "ps3/serialization.hpp"
#include "ps3/trainer.hpp"
#include "ps3/vocabulary.hpp"

namespace ps3 {

// JSONL records: {"id", "context"?: [...], and exactly one of
//   "caption": ["word", ...]      (eos appended on load)
//   "labels":  [["word", ...]..]  (word-form groups, compiled per draw)
//   "fsa":     {...}              (inline automaton JSON)
// }
// A missing context becomes a zero vector of dim context_dim. Every partial
// example's constraint is checked satisfiable within the decode budget.
std::vector<TrainingExample> load_dataset_jsonl(const std::filesystem::path& path,
                                                const Vocabulary& vocab, int context_dim,
                                                const DecodeConfig& decode);

// Parse one record; `where` prefixes error messages (file:line).
TrainingExample parse_dataset_record(const Json& record, const Vocabulary& vocab,
                                     int context_dim, const std::string& where);

MentionEvalSpec mention_spec_from_json(const Json& value, const Vocabulary& vocab,
                                       int context_dim);

}  // namespace ps3
