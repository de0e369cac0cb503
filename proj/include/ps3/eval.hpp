#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ps3/model.hpp"
#include "ps3/vocabulary.hpp"

namespace ps3 {

// exp(total NLL / total token count including eos) over complete sequences.
double perplexity(const ModelParams& model, std::span<const TrainingPair> dataset);

struct MentionConcept {
  std::string name;
  DisjunctiveSet words;
};

struct MentionExample {
  std::string id;
  ContextVector ctx;
  std::vector<std::string> present;  // concept names treated as ground truth
};

struct MentionEvalSpec {
  std::vector<MentionConcept> concepts;
  std::vector<MentionExample> examples;
};

struct ConceptScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int tp = 0, fp = 0, fn = 0;
};

struct MentionEvalResult {
  std::map<std::string, ConceptScore> per_concept;
  double macro_f1 = 0.0;
};

// A decode mentions a concept iff it contains any token of the concept's
// disjunctive set; decodes align with spec.examples by position.
MentionEvalResult mention_f1(std::span<const std::vector<TokenId>> decodes,
                             const MentionEvalSpec& spec);

}  // namespace ps3
