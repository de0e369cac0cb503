#include "ps3/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ps3/errors.hpp"

namespace ps3 {

double perplexity(const ModelParams& model, std::span<const TrainingPair> dataset) {
  if (dataset.empty()) {
    throw ValidationError("perplexity: empty dataset");
  }
  double nll = 0.0;
  long tokens = 0;
  for (const auto& ex : dataset) {
    nll -= sequence_logprob(model, ex.ctx, ex.seq);
    tokens += static_cast<long>(ex.seq.size());
  }
  return std::exp(nll / static_cast<double>(tokens));
}

MentionEvalResult mention_f1(std::span<const std::vector<TokenId>> decodes,
                             const MentionEvalSpec& spec) {
  if (decodes.size() != spec.examples.size()) {
    throw ValidationError("mention_f1: decodes do not align with the eval examples");
  }
  {
    std::set<std::string> names;
    for (const auto& concept_def : spec.concepts) {
      if (!names.insert(concept_def.name).second) {
        throw ValidationError("duplicate concept name: '" + concept_def.name + "'");
      }
    }
    for (const auto& ex : spec.examples) {
      for (const auto& name : ex.present) {
        if (names.find(name) == names.end()) {
          throw ValidationError("example '" + ex.id + "' references unknown concept '" +
                                name + "'");
        }
      }
    }
  }

  MentionEvalResult result;
  double f1_sum = 0.0;
  for (const auto& concept_def : spec.concepts) {
    ConceptScore score;
    for (size_t i = 0; i < decodes.size(); ++i) {
      const bool predicted =
          std::any_of(decodes[i].begin(), decodes[i].end(),
                      [&](TokenId t) { return concept_def.words.contains(t); });
      const bool actual =
          std::find(spec.examples[i].present.begin(), spec.examples[i].present.end(),
                    concept_def.name) != spec.examples[i].present.end();
      if (predicted && actual) {
        ++score.tp;
      } else if (predicted && !actual) {
        ++score.fp;
      } else if (!predicted && actual) {
        ++score.fn;
      }
    }
    score.precision =
        score.tp + score.fp > 0
            ? static_cast<double>(score.tp) / static_cast<double>(score.tp + score.fp)
            : 0.0;
    score.recall =
        score.tp + score.fn > 0
            ? static_cast<double>(score.tp) / static_cast<double>(score.tp + score.fn)
            : 0.0;
    score.f1 = score.precision + score.recall > 0.0
                   ? 2.0 * score.precision * score.recall /
                         (score.precision + score.recall)
                   : 0.0;
    f1_sum += score.f1;
    result.per_concept.emplace(concept_def.name, score);
  }
  result.macro_f1 =
      spec.concepts.empty() ? 0.0 : f1_sum / static_cast<double>(spec.concepts.size());
  return result;
}

}  // namespace ps3
