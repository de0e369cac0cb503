#include <CLI11.hpp>
#include <iostream>

#include "ps3/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Partially-specified sequence supervision: automata-constrained "
               "decoding and training for toy sequence models"};
  app.require_subcommand(1);

  ps3::CompileFsaArgs compile_args;
  auto* compile = app.add_subcommand(
      "compile-fsa", "Compile a constraint spec into automaton JSON");
  compile->add_option("--spec", compile_args.spec, "Constraint spec JSON file")
      ->required();
  compile->add_option("--vocab", compile_args.vocab, "Vocabulary JSON file")->required();
  compile->add_option("--out", compile_args.out, "Output automaton JSON file")
      ->required();
  compile->add_option("--max-len", compile_args.max_len,
                      "Length budget for satisfiability and the language sample");

  ps3::TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model on complete and/or partial data");
  train->add_option("--data", train_args.data, "Dataset JSONL file(s)")->required();
  train->add_option("--config", train_args.config, "Training config JSON")->required();
  train->add_option("--vocab", train_args.vocab, "Vocabulary JSON file")->required();
  train->add_option("--out", train_args.out_dir, "Output directory")->required();
  std::uint64_t seed_override = 0;
  auto* seed_opt = train->add_option("--seed", seed_override, "Override the config seed");
  train->add_option("--resume", train_args.resume, "Checkpoint to resume from");

  ps3::DecodeArgs decode_args;
  auto* decode = app.add_subcommand("decode", "Decode contexts from a checkpoint");
  decode->add_option("--checkpoint", decode_args.checkpoint, "Model checkpoint JSON")
      ->required();
  decode->add_option("--vocab", decode_args.vocab, "Vocabulary JSON file")->required();
  decode->add_option("--data", decode_args.data, "Dataset JSONL file")->required();
  decode->add_option("--out", decode_args.out, "Output JSONL file")->required();
  decode->add_option("--beam-size", decode_args.beam_size, "Beam size");
  decode->add_option("--max-len", decode_args.max_len, "Maximum sequence length");
  decode->add_option("--mode", decode_args.mode, "eos | fixed");
  decode->add_flag("--constrained", decode_args.constrained,
                   "Apply each record's constraint during decoding");
  decode->add_option("--seed", decode_args.seed, "Seed for label-group resampling");

  ps3::EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Perplexity and mention-F1 evaluation");
  eval->add_option("--checkpoint", eval_args.checkpoint, "Model checkpoint JSON")
      ->required();
  eval->add_option("--vocab", eval_args.vocab, "Vocabulary JSON file")->required();
  eval->add_option("--data", eval_args.data, "Caption JSONL file for perplexity");
  eval->add_option("--mention-spec", eval_args.mention_spec, "Mention eval spec JSON");
  eval->add_option("--out", eval_args.out, "Write the report JSON here");
  eval->add_option("--beam-size", eval_args.beam_size, "Beam size for mention decoding");
  eval->add_option("--max-len", eval_args.max_len, "Maximum sequence length");

  ps3::SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic novel-word corpus");
  synth->add_option("--seed", synth_args.seed, "Corpus seed");
  synth->add_option("--out", synth_args.out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (compile->parsed()) {
    return ps3::run_compile_fsa(compile_args, std::cout, std::cerr);
  }
  if (train->parsed()) {
    if (seed_opt->count() > 0) {
      train_args.seed = seed_override;
    }
    return ps3::run_train(train_args, std::cout, std::cerr);
  }
  if (decode->parsed()) {
    return ps3::run_decode(decode_args, std::cout, std::cerr);
  }
  if (eval->parsed()) {
    return ps3::run_eval(eval_args, std::cout, std::cerr);
  }
  if (synth->parsed()) {
    return ps3::run_synth(synth_args, std::cout, std::cerr);
  }
  return ps3::kExitValidation;
}
