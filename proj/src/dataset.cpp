#include "ps3/dataset.hpp"

#include <fstream>

#include "ps3/errors.hpp"
#include "ps3/fsa_builders.hpp"

namespace ps3 {

namespace {

ContextVector parse_context(const Json& record, int context_dim, const std::string& where) {
  if (!record.contains("context")) {
    return ContextVector::Zero(context_dim);
  }
  const auto& arr = record["context"];
  if (!arr.is_array()) {
    throw ValidationError(where + ": context must be an array of numbers");
  }
  if (static_cast<int>(arr.size()) != context_dim) {
    throw ValidationError(where + ": context has dim " + std::to_string(arr.size()) +
                          ", expected " + std::to_string(context_dim));
  }
  ContextVector ctx(context_dim);
  for (int i = 0; i < context_dim; ++i) {
    ctx(i) = arr[static_cast<size_t>(i)].get<double>();
  }
  return ctx;
}

// Canonical automaton used only for the satisfiability check at load time;
// per-draw resampling happens in the trainer.
Fsa probe_fsa(const PartialPayload& payload, const Vocabulary& vocab) {
  if (payload.fixed) {
    return *payload.fixed;
  }
  const size_t n = std::min<size_t>(payload.groups.size(), 3);
  std::vector<DisjunctiveSet> probe(payload.groups.begin(),
                                    payload.groups.begin() + static_cast<long>(n));
  return build_at_least_m_of_n(vocab, probe, static_cast<int>(std::min<size_t>(2, n)));
}

}  // namespace

TrainingExample parse_dataset_record(const Json& record, const Vocabulary& vocab,
                                     int context_dim, const std::string& where) {
  if (!record.is_object()) {
    throw ValidationError(where + ": record must be a JSON object");
  }
  if (!record.contains("id") || !record["id"].is_string()) {
    throw ValidationError(where + ": record needs a string id");
  }
  TrainingExample ex;
  ex.id = record["id"].get<std::string>();
  ex.ctx = parse_context(record, context_dim, where);

  const int payloads = static_cast<int>(record.contains("caption")) +
                       static_cast<int>(record.contains("labels")) +
                       static_cast<int>(record.contains("fsa"));
  if (payloads != 1) {
    throw ValidationError(where + ": id=" + ex.id +
                          ": record needs exactly one of caption/labels/fsa");
  }

  try {
    if (record.contains("caption")) {
      const auto& words = record["caption"];
      if (!words.is_array() || words.empty()) {
        throw ValidationError("caption must be a non-empty array of words");
      }
      std::vector<TokenId> seq;
      for (const auto& w : words) {
        const TokenId id = vocab.id_of(w.get<std::string>());
        if (id == vocab.eos_id()) {
          throw ValidationError("caption must not contain the eos sentinel");
        }
        seq.push_back(id);
      }
      seq.push_back(vocab.eos_id());
      ex.complete = std::move(seq);
    } else if (record.contains("labels")) {
      PartialPayload payload;
      payload.groups = groups_from_json(record["labels"], vocab);
      ex.partial = std::move(payload);
    } else {
      PartialPayload payload;
      payload.fixed = fsa_from_json(record["fsa"], vocab);
      ex.partial = std::move(payload);
    }
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": id=" + ex.id + ": " + e.what());
  }
  return ex;
}

std::vector<TrainingExample> load_dataset_jsonl(const std::filesystem::path& path,
                                                const Vocabulary& vocab, int context_dim,
                                                const DecodeConfig& decode) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open dataset: " + path.string());
  }
  const int content_budget = decode.mode == DecodeConfig::Mode::kEosTerminated
                                 ? decode.max_len - 1
                                 : decode.max_len;
  std::vector<TrainingExample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    const std::string where = path.string() + ":" + std::to_string(line_no);
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ValidationError(where + ": invalid JSON: " + e.what());
    }
    TrainingExample ex = parse_dataset_record(record, vocab, context_dim, where);
    if (ex.partial) {
      if (!language_nonempty(probe_fsa(*ex.partial, vocab), content_budget)) {
        throw ValidationError(where + ": id=" + ex.id +
                              ": constraint is unsatisfiable within max_len " +
                              std::to_string(decode.max_len));
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

MentionEvalSpec mention_spec_from_json(const Json& value, const Vocabulary& vocab,
                                       int context_dim) {
  if (!value.is_object() || !value.contains("concepts") || !value.contains("examples")) {
    throw ValidationError("mention spec needs 'concepts' and 'examples'");
  }
  MentionEvalSpec spec;
  for (const auto& c : value["concepts"]) {
    MentionConcept concept_def;
    concept_def.name = c.at("name").get<std::string>();
    std::vector<std::string> words;
    for (const auto& w : c.at("words")) {
      words.push_back(w.get<std::string>());
    }
    concept_def.words = word_form_group(vocab, words);
    spec.concepts.push_back(std::move(concept_def));
  }
  int idx = 0;
  for (const auto& e : value["examples"]) {
    MentionExample ex;
    ex.id = e.at("id").get<std::string>();
    ex.ctx = parse_context(e, context_dim, "mention example " + std::to_string(idx));
    if (e.contains("present")) {
      for (const auto& name : e["present"]) {
        ex.present.push_back(name.get<std::string>());
      }
    }
    spec.examples.push_back(std::move(ex));
    ++idx;
  }
  return spec;
}

}  // namespace ps3
