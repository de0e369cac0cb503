#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "ps3/fsa.hpp"
#include "ps3/model.hpp"
#include "ps3/vocabulary.hpp"

namespace ps3 {

using Json = nlohmann::json;

// --- files ---------------------------------------------------------------

Json load_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& value);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// --- vocabulary & groups -------------------------------------------------

// Vocabulary file: JSON array of content word strings (eos is implicit).
Vocabulary vocabulary_from_json(const Json& array);
Json vocabulary_to_json(const Vocabulary& vocab);

// Word-form groups file: JSON array of arrays of strings.
std::vector<DisjunctiveSet> groups_from_json(const Json& array, const Vocabulary& vocab);

// --- automata ------------------------------------------------------------

// Canonical interchange form; saving the result of a load reproduces the
// original bytes.
Json fsa_to_json(const Fsa& fsa, const Vocabulary& vocab);
Fsa fsa_from_json(const Json& value, const Vocabulary& vocab);

// Constraint specs: {"type":"at_least_m_of_n"|"pattern"|"negation"|"intersect", ...}
Fsa compile_constraint(const Json& spec, const Vocabulary& vocab);

// --- model checkpoints ---------------------------------------------------

Json checkpoint_to_json(const ModelParams& params);
ModelParams checkpoint_from_json(const Json& value);

// Embedding table file: JSON matrix, one row per token (vocab x embed).
Eigen::MatrixXd embedding_table_from_json(const Json& value);

}  // namespace ps3
