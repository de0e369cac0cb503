#include "ps3/commands.hpp"

#include <functional>
#include <iomanip>
#include <sstream>

#include "ps3/dataset.hpp"
#include "ps3/errors.hpp"
#include "ps3/fsa_builders.hpp"
#include "ps3/oracle.hpp"
#include "ps3/synth.hpp"

namespace ps3 {

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const UnsatisfiableError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUnsatisfiable;
  } catch (const DecodeFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitDecodeFailure;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const GuardExceeded& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

DecodeConfig decode_config(int beam_size, int max_len, const std::string& mode) {
  DecodeConfig cfg;
  cfg.beam_size = beam_size;
  cfg.max_len = max_len;
  if (mode == "eos") {
    cfg.mode = DecodeConfig::Mode::kEosTerminated;
  } else if (mode == "fixed") {
    cfg.mode = DecodeConfig::Mode::kFixedLength;
  } else {
    throw ValidationError("unknown decode mode '" + mode + "' (use eos|fixed)");
  }
  return cfg;
}

struct TrainSpec {
  ModelDims dims;
  bool tied = false;
  Ps3Config ps3;
  int checkpoint_every = 0;
  std::filesystem::path embeddings_file;
  bool freeze_embeddings = false;
};

TrainSpec parse_train_config(const Json& config, int vocab_size) {
  TrainSpec spec;
  const auto& model = config.at("model");
  spec.dims.embed = model.at("embed").get<int>();
  spec.dims.hidden = model.at("hidden").get<int>();
  spec.dims.context = model.at("context").get<int>();
  spec.dims.vocab = vocab_size;
  spec.tied = model.value("tied", false);

  const auto& train = config.at("train");
  const std::string mode = train.value("mode", "online");
  if (mode == "online") {
    spec.ps3.mode = Ps3Config::Mode::kOnline;
  } else if (mode == "offline") {
    spec.ps3.mode = Ps3Config::Mode::kOffline;
  } else {
    throw ValidationError("train.mode must be 'online' or 'offline'");
  }
  spec.ps3.total_steps = train.value("total_steps", 100);
  spec.ps3.outer_iters = train.value("outer_iters", 5);
  spec.ps3.step2_steps_per_iter = train.value("step2_steps", 0);
  spec.ps3.minibatch_size = train.value("minibatch_size", 100);
  if (train.contains("mix")) {
    spec.ps3.mix_complete = train["mix"].at(0).get<int>();
    spec.ps3.mix_partial = train["mix"].at(1).get<int>();
  }
  spec.ps3.decode.beam_size = train.value("beam_size", 5);
  spec.ps3.decode.max_len = train.value("max_len", 16);
  spec.ps3.lr_initial = train.value("lr", 0.001);
  spec.ps3.embedding_lr_multiplier = train.value("embedding_lr_multiplier", 0.1);
  spec.ps3.pretrain_steps = train.value("pretrain_steps", -1);
  spec.ps3.cold_start = train.value("cold_start", false);
  spec.ps3.seed = train.value("seed", std::uint64_t{0});
  spec.checkpoint_every = train.value("checkpoint_every", 0);

  if (config.contains("embeddings")) {
    spec.embeddings_file = config["embeddings"].at("file").get<std::string>();
    spec.freeze_embeddings = config["embeddings"].value("freeze", true);
  }
  return spec;
}

std::string report_to_jsonl(const TrainReport& report) {
  std::ostringstream out;
  for (const auto& line : report.lines) {
    Json record;
    record["iter"] = line.iter;
    record["loss"] = line.loss;
    record["lr"] = line.lr;
    record["step1_failures"] = line.step1_failures;
    record["constraint_satisfaction_rate"] = line.constraint_satisfaction_rate;
    out << record.dump() << "\n";
  }
  return out.str();
}

Json checkpoint_with_state(const ModelParams& params, int step,
                           const std::string& rng_state) {
  Json ckpt = checkpoint_to_json(params);
  ckpt["trainer_state"] = {{"step", step}, {"rng", rng_state}};
  return ckpt;
}

}  // namespace

int run_compile_fsa(const CompileFsaArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    const Vocabulary vocab = vocabulary_from_json(load_json_file(args.vocab));
    const Fsa fsa = compile_constraint(load_json_file(args.spec), vocab);
    if (!language_nonempty(fsa, args.max_len)) {
      throw UnsatisfiableError("empty language: constraint admits no sequence of length <= " +
                               std::to_string(args.max_len));
    }
    write_json_file(args.out, fsa_to_json(fsa, vocab));

    auto sample = enumerate_language(fsa, vocab, args.max_len, 20);
    Json summary;
    summary["num_states"] = fsa.num_states();
    summary["out"] = args.out.string();
    Json sequences = Json::array();
    for (const auto& seq : sample) {
      Json words = Json::array();
      for (TokenId t : seq) {
        words.push_back(vocab.string_of(t));
      }
      sequences.push_back(std::move(words));
    }
    summary["language_sample"] = std::move(sequences);
    out << summary.dump(2) << "\n";
    return kExitOk;
  });
}

int run_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    const Vocabulary vocab = vocabulary_from_json(load_json_file(args.vocab));
    TrainSpec spec = parse_train_config(load_json_file(args.config), vocab.size());
    if (args.seed) {
      spec.ps3.seed = *args.seed;
    }
    if (args.data.empty()) {
      throw ValidationError("train: no data files given");
    }

    std::vector<TrainingExample> dataset;
    for (const auto& file : args.data) {
      auto part = load_dataset_jsonl(file, vocab, spec.dims.context, spec.ps3.decode);
      dataset.insert(dataset.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
    }

    std::filesystem::create_directories(args.out_dir);
    ModelParams model = init_model(spec.dims, spec.tied, spec.ps3.seed);
    const ResumePoint* resume_ptr = nullptr;
    ResumePoint resume;
    if (!args.resume.empty()) {
      const Json ckpt = load_json_file(args.resume);
      model = checkpoint_from_json(ckpt);
      if (!ckpt.contains("trainer_state")) {
        throw ValidationError("resume checkpoint has no trainer_state");
      }
      resume.step = ckpt["trainer_state"].at("step").get<int>();
      resume.rng_state = ckpt["trainer_state"].at("rng").get<std::string>();
      resume_ptr = &resume;
      if (spec.ps3.mode != Ps3Config::Mode::kOnline) {
        throw ValidationError("resume is only supported for online training");
      }
    }
    if (!spec.embeddings_file.empty()) {
      load_fixed_embeddings(model, embedding_table_from_json(load_json_file(spec.embeddings_file)),
                            spec.freeze_embeddings);
    }

    TrainReport report;
    if (spec.ps3.mode == Ps3Config::Mode::kOnline) {
      auto hook = [&](int step, const ModelParams& params, const std::string& rng_state) {
        std::ostringstream name;
        name << "checkpoint_step_" << std::setfill('0') << std::setw(6) << step << ".json";
        write_json_file(args.out_dir / name.str(),
                        checkpoint_with_state(params, step, rng_state));
      };
      report = ps3_online(model, vocab, dataset, spec.ps3, resume_ptr, hook,
                          spec.checkpoint_every);
    } else {
      report = ps3_offline(model, vocab, dataset, spec.ps3);
    }

    write_text_file(args.out_dir / "report.jsonl", report_to_jsonl(report));
    write_json_file(args.out_dir / "checkpoint_final.json", checkpoint_to_json(model));
    if (report.aborted) {
      throw DecodeFailure(report.abort_reason);
    }
    out << "trained " << report.lines.size() << " iterations; final loss "
        << (report.lines.empty() ? 0.0 : report.lines.back().loss) << "\n";
    return kExitOk;
  });
}

int run_decode(const DecodeArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    const Vocabulary vocab = vocabulary_from_json(load_json_file(args.vocab));
    const ModelParams model = checkpoint_from_json(load_json_file(args.checkpoint));
    if (model.dims.vocab != vocab.size()) {
      throw ValidationError("checkpoint vocabulary size does not match the vocab file");
    }
    const DecodeConfig cfg = decode_config(args.beam_size, args.max_len, args.mode);
    auto records = load_dataset_jsonl(args.data, vocab, model.dims.context, cfg);

    std::mt19937_64 rng(args.seed);
    std::vector<BatchItem> items;
    std::vector<std::string> ids;
    std::vector<std::optional<Fsa>> fsas;
    for (const auto& rec : records) {
      BatchItem item;
      item.ctx = rec.ctx;
      if (args.constrained && rec.partial) {
        item.fsa = instantiate_constraint(*rec.partial, vocab, rng);
      }
      ids.push_back(rec.id);
      fsas.push_back(item.fsa);
      items.push_back(std::move(item));
    }

    ModelScorer scorer(model);
    auto outcomes = decode_batch(scorer, items, cfg, vocab);

    std::ostringstream lines;
    int first_error = kExitOk;
    for (size_t i = 0; i < outcomes.size(); ++i) {
      Json record;
      record["id"] = ids[i];
      if (outcomes[i].result) {
        Json words = Json::array();
        for (TokenId t : outcomes[i].result->tokens) {
          words.push_back(vocab.string_of(t));
        }
        record["tokens"] = std::move(words);
        record["logprob"] = outcomes[i].result->logprob;
        bool accepted = true;
        if (fsas[i]) {
          std::span<const TokenId> content(outcomes[i].result->tokens);
          if (cfg.mode == DecodeConfig::Mode::kEosTerminated) {
            content = content.subspan(0, content.size() - 1);
          }
          accepted = fsas[i]->accepts(content);
        }
        record["accepted"] = accepted;
      } else {
        record["error"] = outcomes[i].error;
        record["accepted"] = false;
        if (first_error == kExitOk) {
          first_error = outcomes[i].error_kind == DecodeErrorKind::kUnsatisfiable
                            ? kExitUnsatisfiable
                            : kExitDecodeFailure;
        }
      }
      lines << record.dump() << "\n";
    }
    write_text_file(args.out, lines.str());
    out << "decoded " << outcomes.size() << " records to " << args.out.string() << "\n";
    return first_error;
  });
}

int run_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    const Vocabulary vocab = vocabulary_from_json(load_json_file(args.vocab));
    const ModelParams model = checkpoint_from_json(load_json_file(args.checkpoint));
    if (model.dims.vocab != vocab.size()) {
      throw ValidationError("checkpoint vocabulary size does not match the vocab file");
    }
    const DecodeConfig cfg = decode_config(args.beam_size, args.max_len, "eos");

    Json report;
    if (!args.data.empty()) {
      auto records = load_dataset_jsonl(args.data, vocab, model.dims.context, cfg);
      std::vector<TrainingPair> pairs;
      for (auto& rec : records) {
        if (!rec.complete) {
          throw ValidationError("eval data must contain caption records (id=" + rec.id +
                                ")");
        }
        pairs.push_back({rec.ctx, *rec.complete});
      }
      report["perplexity"] = perplexity(model, pairs);
    }

    if (!args.mention_spec.empty()) {
      const MentionEvalSpec spec =
          mention_spec_from_json(load_json_file(args.mention_spec), vocab,
                                 model.dims.context);
      ModelScorer scorer(model);
      std::vector<std::vector<TokenId>> decodes;
      for (const auto& ex : spec.examples) {
        try {
          DecodeResult res = beam_search(scorer, ex.ctx, cfg, vocab);
          res.tokens.pop_back();  // drop eos
          decodes.push_back(std::move(res.tokens));
        } catch (const DecodeFailure&) {
          decodes.emplace_back();  // no decode: mentions nothing
        }
      }
      const MentionEvalResult result = mention_f1(decodes, spec);
      Json per_concept;
      for (const auto& [name, score] : result.per_concept) {
        per_concept[name] = {{"p", score.precision},
                             {"r", score.recall},
                             {"f1", score.f1},
                             {"tp", score.tp},
                             {"fp", score.fp},
                             {"fn", score.fn}};
      }
      report["per_concept"] = std::move(per_concept);
      report["macro_f1"] = result.macro_f1;
    }

    if (report.empty()) {
      throw ValidationError("eval: provide --data and/or --mention-spec");
    }
    if (!args.out.empty()) {
      write_json_file(args.out, report);
    }
    out << report.dump(2) << "\n";
    return kExitOk;
  });
}

int run_synth(const SynthArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    const SynthPaths paths = generate_synthetic_corpus(args.seed, args.out_dir);
    Json summary;
    summary["vocab"] = paths.vocab.string();
    summary["train_complete"] = paths.train_complete.string();
    summary["train_partial"] = paths.train_partial.string();
    summary["eval_indomain"] = paths.eval_indomain.string();
    summary["mention_spec"] = paths.mention_spec.string();
    out << summary.dump(2) << "\n";
    return kExitOk;
  });
}

}  // namespace ps3
