#include "ps3/synth.hpp"

#include <array>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ps3/serialization.hpp"

namespace ps3 {

namespace {

const std::array<const char*, 2> kDets = {"a", "the"};
const std::array<const char*, 4> kColors = {"red", "blue", "green", "black"};
const std::array<std::array<const char*, 2>, 10> kNouns = {{
    {"dog", "dogs"},
    {"cat", "cats"},
    {"bird", "birds"},
    {"car", "cars"},
    {"bike", "bikes"},
    {"boat", "boats"},
    // held-out groups
    {"zebra", "zebras"},
    {"pizza", "pizzas"},
    {"couch", "couches"},
    {"bus", "buses"},
}};
constexpr int kFirstHeldOut = 6;
const std::array<const char*, 6> kVerbs = {"sits", "runs",  "sleeps",
                                           "waits", "jumps", "eats"};
const std::array<const char*, 4> kAdverbs = {"here", "there", "outside", "inside"};

constexpr int kTrainExamples = 600;
constexpr int kExtraInDomainPartials = 100;
constexpr int kEvalSentences = 100;
constexpr int kMentionPerConcept = 10;
constexpr int kMentionNegatives = 20;

struct Sentence {
  int noun_group = 0;
  int color = 0;
  int form = 0;
  int det = 0;
  int verb = 0;
  int adverb = -1;  // -1: none
};

double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Sentence draw_sentence(std::mt19937_64& rng) {
  Sentence s;
  s.noun_group = static_cast<int>(rng() % kNouns.size());
  s.color = static_cast<int>(rng() % kColors.size());
  s.form = static_cast<int>(rng() % 2);
  s.det = static_cast<int>(rng() % kDets.size());
  s.verb = static_cast<int>(rng() % kVerbs.size());
  s.adverb = unit_draw(rng) < 0.5 ? static_cast<int>(rng() % kAdverbs.size()) : -1;
  return s;
}

Json caption_words(const Sentence& s) {
  Json words = Json::array();
  words.push_back(kDets[static_cast<size_t>(s.det)]);
  words.push_back(kColors[static_cast<size_t>(s.color)]);
  words.push_back(kNouns[static_cast<size_t>(s.noun_group)][static_cast<size_t>(s.form)]);
  words.push_back(kVerbs[static_cast<size_t>(s.verb)]);
  if (s.adverb >= 0) {
    words.push_back(kAdverbs[static_cast<size_t>(s.adverb)]);
  }
  return words;
}

Json context_for(const Sentence& s, std::mt19937_64& rng) {
  Json ctx = Json::array();
  for (int d = 0; d < kSynthContextDim; ++d) {
    double v = (unit_draw(rng) - 0.5) * 0.04;  // small noise floor
    if (d == s.noun_group) {
      v += 1.0;
    }
    if (d == 10 + s.color) {
      v += 1.0;
    }
    ctx.push_back(v);
  }
  return ctx;
}

Json noun_group_labels(const Sentence& s) {
  Json group = Json::array();
  for (const char* form : kNouns[static_cast<size_t>(s.noun_group)]) {
    group.push_back(form);
  }
  return group;
}

}  // namespace

SynthPaths generate_synthetic_corpus(std::uint64_t seed,
                                     const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::mt19937_64 rng(seed);

  SynthPaths paths{out_dir / "vocab.json", out_dir / "train_complete.jsonl",
                   out_dir / "train_partial.jsonl", out_dir / "eval_indomain.jsonl",
                   out_dir / "mention_spec.json"};

  Json vocab = Json::array();
  for (const char* w : kDets) vocab.push_back(w);
  for (const char* w : kColors) vocab.push_back(w);
  for (const auto& group : kNouns) {
    for (const char* w : group) vocab.push_back(w);
  }
  for (const char* w : kVerbs) vocab.push_back(w);
  for (const char* w : kAdverbs) vocab.push_back(w);
  write_json_file(paths.vocab, vocab);

  std::ostringstream complete_file, partial_file, eval_file;

  // Training pool: held-out-noun sentences are dropped from the caption file
  // and surface only as label groups (the noun group plus the color, both of
  // which the caption must mention).
  for (int i = 0; i < kTrainExamples; ++i) {
    const Sentence s = draw_sentence(rng);
    Json record;
    record["id"] = "train-" + std::to_string(i);
    record["context"] = context_for(s, rng);
    if (s.noun_group >= kFirstHeldOut) {
      Json labels = Json::array();
      labels.push_back(noun_group_labels(s));
      labels.push_back(Json::array({kColors[static_cast<size_t>(s.color)]}));
      record["labels"] = std::move(labels);
      partial_file << record.dump() << "\n";
    } else {
      record["caption"] = caption_words(s);
      complete_file << record.dump() << "\n";
    }
  }

  // Additional in-domain partial examples with the three-label construction,
  // so training also exercises the at-least-2-of-3 automata.
  for (int i = 0; i < kExtraInDomainPartials; ++i) {
    Sentence s = draw_sentence(rng);
    s.noun_group = s.noun_group % kFirstHeldOut;
    Json record;
    record["id"] = "train-part-" + std::to_string(i);
    record["context"] = context_for(s, rng);
    Json labels = Json::array();
    labels.push_back(noun_group_labels(s));
    labels.push_back(Json::array({kColors[static_cast<size_t>(s.color)]}));
    labels.push_back(Json::array({kVerbs[static_cast<size_t>(s.verb)]}));
    record["labels"] = std::move(labels);
    partial_file << record.dump() << "\n";
  }

  // Held-out in-domain sentences for perplexity.
  for (int i = 0; i < kEvalSentences; ++i) {
    Sentence s = draw_sentence(rng);
    s.noun_group = s.noun_group % kFirstHeldOut;
    Json record;
    record["id"] = "eval-" + std::to_string(i);
    record["context"] = context_for(s, rng);
    record["caption"] = caption_words(s);
    eval_file << record.dump() << "\n";
  }

  write_text_file(paths.train_complete, complete_file.str());
  write_text_file(paths.train_partial, partial_file.str());
  write_text_file(paths.eval_indomain, eval_file.str());

  // Mention eval: each held-out noun group is a concept; positives carry the
  // matching context, negatives are in-domain sentences with no concept.
  Json spec;
  Json concepts = Json::array();
  for (size_t g = kFirstHeldOut; g < kNouns.size(); ++g) {
    Json c;
    c["name"] = kNouns[g][0];
    Json words = Json::array();
    for (const char* w : kNouns[g]) words.push_back(w);
    c["words"] = std::move(words);
    concepts.push_back(std::move(c));
  }
  spec["concepts"] = std::move(concepts);

  Json examples = Json::array();
  int mention_id = 0;
  for (size_t g = kFirstHeldOut; g < kNouns.size(); ++g) {
    for (int i = 0; i < kMentionPerConcept; ++i) {
      Sentence s = draw_sentence(rng);
      s.noun_group = static_cast<int>(g);
      Json e;
      e["id"] = "mention-" + std::to_string(mention_id++);
      e["context"] = context_for(s, rng);
      e["present"] = Json::array({kNouns[g][0]});
      examples.push_back(std::move(e));
    }
  }
  for (int i = 0; i < kMentionNegatives; ++i) {
    Sentence s = draw_sentence(rng);
    s.noun_group = s.noun_group % kFirstHeldOut;
    Json e;
    e["id"] = "mention-" + std::to_string(mention_id++);
    e["context"] = context_for(s, rng);
    e["present"] = Json::array();
    examples.push_back(std::move(e));
  }
  spec["examples"] = std::move(examples);
  write_json_file(paths.mention_spec, spec);

  return paths;
}

}  // namespace ps3
