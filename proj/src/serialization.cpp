#include "ps3/serialization.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ps3/errors.hpp"
#include "ps3/fsa_builders.hpp"

namespace ps3 {

namespace {

constexpr int kFsaFormatVersion = 1;
constexpr int kCheckpointFormatVersion = 1;

void require(bool ok, const std::string& msg) {
  if (!ok) {
    throw ValidationError(msg);
  }
}

std::vector<std::string> string_array(const Json& value, const std::string& what) {
  require(value.is_array(), what + " must be a JSON array");
  std::vector<std::string> out;
  for (const auto& item : value) {
    require(item.is_string(), what + " must contain strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open file: " + path.string());
  }
  Json value;
  try {
    in >> value;
  } catch (const Json::parse_error& e) {
    throw ValidationError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return value;
}

void write_json_file(const std::filesystem::path& path, const Json& value) {
  write_text_file(path, value.dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot write file: " + path.string());
  }
  out << text;
}

Vocabulary vocabulary_from_json(const Json& array) {
  auto words = string_array(array, "vocabulary");
  return build_vocabulary(words);
}

Json vocabulary_to_json(const Vocabulary& vocab) {
  Json array = Json::array();
  for (TokenId id = 0; id < vocab.content_size(); ++id) {
    array.push_back(vocab.string_of(id));
  }
  return array;
}

std::vector<DisjunctiveSet> groups_from_json(const Json& array, const Vocabulary& vocab) {
  require(array.is_array(), "word-form groups must be a JSON array");
  std::vector<DisjunctiveSet> groups;
  for (const auto& entry : array) {
    auto words = string_array(entry, "word-form group");
    groups.push_back(word_form_group(vocab, words));
  }
  return groups;
}

Json fsa_to_json(const Fsa& fsa, const Vocabulary& vocab) {
  validate_fsa(fsa);
  require(fsa.alphabet_size == vocab.content_size(),
          "automaton alphabet does not match the vocabulary");
  Json out;
  out["format_version"] = kFsaFormatVersion;
  out["num_states"] = fsa.num_states();
  out["initial"] = fsa.initial;
  Json accepting = Json::array();
  for (StateId s = 0; s < fsa.num_states(); ++s) {
    if (fsa.is_accepting(s)) {
      accepting.push_back(s);
    }
  }
  out["accepting"] = std::move(accepting);

  Json edges = Json::array();
  for (StateId s = 0; s < fsa.num_states(); ++s) {
    std::map<StateId, std::vector<TokenId>> by_target;
    for (const auto& [tok, to] : fsa.labeled[static_cast<size_t>(s)]) {
      by_target[to].push_back(tok);
    }
    for (const auto& [to, tokens] : by_target) {
      Json edge;
      edge["from"] = s;
      edge["to"] = to;
      Json labels = Json::array();
      for (TokenId tok : tokens) {  // std::map keeps token ids ascending
        labels.push_back(vocab.string_of(tok));
      }
      edge["labels"] = std::move(labels);
      edges.push_back(std::move(edge));
    }
  }
  out["edges"] = std::move(edges);

  Json defaults = Json::array();
  for (StateId s = 0; s < fsa.num_states(); ++s) {
    defaults.push_back({{"from", s}, {"to", fsa.default_target[static_cast<size_t>(s)]}});
  }
  out["defaults"] = std::move(defaults);
  return out;
}

Fsa fsa_from_json(const Json& value, const Vocabulary& vocab) {
  require(value.is_object(), "fsa must be a JSON object");
  require(value.value("format_version", -1) == kFsaFormatVersion,
          "unsupported fsa format_version");
  const int n = value.value("num_states", -1);
  require(n > 0, "fsa num_states must be positive");

  Fsa fsa;
  fsa.alphabet_size = vocab.content_size();
  fsa.initial = value.value("initial", -1);
  fsa.accepting.assign(static_cast<size_t>(n), false);
  fsa.labeled.resize(static_cast<size_t>(n));
  fsa.default_target.assign(static_cast<size_t>(n), -1);

  require(value.contains("accepting") && value["accepting"].is_array(),
          "fsa is missing the accepting array");
  for (const auto& s : value["accepting"]) {
    const int idx = s.get<int>();
    require(idx >= 0 && idx < n, "accepting state out of range");
    fsa.accepting[static_cast<size_t>(idx)] = true;
  }

  require(value.contains("defaults") && value["defaults"].is_array(),
          "fsa is missing the defaults array");
  for (const auto& d : value["defaults"]) {
    const int from = d.value("from", -1);
    const int to = d.value("to", -1);
    require(from >= 0 && from < n && to >= 0 && to < n, "default edge out of range");
    require(fsa.default_target[static_cast<size_t>(from)] == -1,
            "duplicate default for state " + std::to_string(from));
    fsa.default_target[static_cast<size_t>(from)] = to;
  }
  for (StateId s = 0; s < n; ++s) {
    require(fsa.default_target[static_cast<size_t>(s)] != -1,
            "state " + std::to_string(s) + " has no default edge");
  }

  if (value.contains("edges")) {
    require(value["edges"].is_array(), "fsa edges must be an array");
    for (const auto& e : value["edges"]) {
      const int from = e.value("from", -1);
      const int to = e.value("to", -1);
      require(from >= 0 && from < n && to >= 0 && to < n, "edge endpoint out of range");
      for (const auto& label : string_array(e.at("labels"), "edge labels")) {
        const TokenId tok = vocab.id_of(label);
        require(tok != vocab.eos_id(), "eos cannot label an automaton edge");
        auto [it, inserted] = fsa.labeled[static_cast<size_t>(from)].emplace(tok, to);
        require(inserted, "duplicate edge label '" + label + "' at state " +
                              std::to_string(from));
      }
    }
  }
  validate_fsa(fsa);
  return fsa;
}

Fsa compile_constraint(const Json& spec, const Vocabulary& vocab) {
  require(spec.is_object() && spec.contains("type"), "constraint spec needs a type");
  const std::string type = spec["type"].get<std::string>();
  if (type == "at_least_m_of_n") {
    require(spec.contains("m") && spec["m"].is_number_integer(),
            "at_least_m_of_n needs an integer m");
    auto groups = groups_from_json(spec.at("groups"), vocab);
    return build_at_least_m_of_n(vocab, groups, spec["m"].get<int>());
  }
  if (type == "negation") {
    auto words = string_array(spec.at("phrase"), "negation phrase");
    std::vector<TokenId> phrase;
    for (const auto& w : words) {
      phrase.push_back(vocab.id_of(w));
    }
    return build_negation(vocab, phrase);
  }
  if (type == "pattern") {
    require(spec.contains("items") && spec["items"].is_array(),
            "pattern needs an items array");
    std::vector<PatternItem> items;
    for (const auto& item : spec["items"]) {
      require(item.is_object(), "pattern item must be an object");
      if (item.contains("word")) {
        items.push_back(PatternItem::make_word(
            word_form_group(vocab, string_array(item["word"], "pattern word"))));
      } else if (item.contains("gap")) {
        const auto& gap = item["gap"];
        std::optional<int> max;
        if (gap.contains("max")) {
          max = gap["max"].get<int>();
        }
        items.push_back(PatternItem::make_gap(gap.value("min", 1), max));
      } else {
        throw ValidationError("pattern item must have 'word' or 'gap'");
      }
    }
    return build_pattern(vocab, items);
  }
  if (type == "intersect") {
    require(spec.contains("of") && spec["of"].is_array() && !spec["of"].empty(),
            "intersect needs a non-empty 'of' array");
    Fsa acc = compile_constraint(spec["of"][0], vocab);
    for (size_t i = 1; i < spec["of"].size(); ++i) {
      acc = intersect(acc, compile_constraint(spec["of"][i], vocab));
    }
    return acc;
  }
  throw ValidationError("unknown constraint type: '" + type + "'");
}

Json checkpoint_to_json(const ModelParams& params) {
  Json out;
  out["format_version"] = kCheckpointFormatVersion;
  out["dims"] = {{"embed", params.dims.embed},
                 {"hidden", params.dims.hidden},
                 {"context", params.dims.context},
                 {"vocab", params.dims.vocab}};
  out["tied_output"] = params.tied_output;
  out["freeze_embeddings"] = params.freeze_embeddings;
  out["seed"] = params.seed;
  Json tensors;
  for (const auto& view : param_views(params)) {
    Json flat = Json::array();
    for (long i = 0; i < view.size; ++i) {
      if (!std::isfinite(view.data[i])) {
        throw ValidationError("checkpoint refused: non-finite value in " + view.name);
      }
      flat.push_back(view.data[i]);
    }
    tensors[view.name] = std::move(flat);
  }
  out["params"] = std::move(tensors);
  return out;
}

ModelParams checkpoint_from_json(const Json& value) {
  require(value.is_object(), "checkpoint must be a JSON object");
  require(value.value("format_version", -1) == kCheckpointFormatVersion,
          "unsupported checkpoint format_version");
  const auto& dims = value.at("dims");
  ModelDims d{dims.at("embed").get<int>(), dims.at("hidden").get<int>(),
              dims.at("context").get<int>(), dims.at("vocab").get<int>()};
  ModelParams p = allocate_model(d, value.at("tied_output").get<bool>());
  p.freeze_embeddings = value.at("freeze_embeddings").get<bool>();
  p.seed = value.at("seed").get<std::uint64_t>();
  const auto& tensors = value.at("params");
  for (auto& view : param_views(p)) {
    require(tensors.contains(view.name), "checkpoint missing tensor " + view.name);
    const auto& flat = tensors[view.name];
    require(flat.is_array() && static_cast<long>(flat.size()) == view.size,
            "checkpoint tensor " + view.name + " has wrong size");
    for (long i = 0; i < view.size; ++i) {
      view.data[i] = flat[static_cast<size_t>(i)].get<double>();
      require(std::isfinite(view.data[i]),
              "checkpoint tensor " + view.name + " holds a non-finite value");
    }
  }
  return p;
}

Eigen::MatrixXd embedding_table_from_json(const Json& value) {
  require(value.is_array() && !value.empty(), "embedding table must be a non-empty array");
  const size_t rows = value.size();
  require(value[0].is_array() && !value[0].empty(), "embedding table rows must be arrays");
  const size_t cols = value[0].size();
  // Row per token in the file; the model stores one column per token.
  Eigen::MatrixXd table(static_cast<long>(cols), static_cast<long>(rows));
  for (size_t r = 0; r < rows; ++r) {
    require(value[r].is_array() && value[r].size() == cols,
            "embedding table rows have inconsistent lengths");
    for (size_t c = 0; c < cols; ++c) {
      table(static_cast<long>(c), static_cast<long>(r)) = value[r][c].get<double>();
    }
  }
  return table;
}

}  // namespace ps3
