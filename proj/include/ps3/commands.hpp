#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ps3 {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitUnsatisfiable = 3;
inline constexpr int kExitDecodeFailure = 4;

struct CompileFsaArgs {
  std::filesystem::path spec;
  std::filesystem::path vocab;
  std::filesystem::path out;
  int max_len = 16;  // budget for the satisfiability check and language sample
};

struct TrainArgs {
  std::vector<std::filesystem::path> data;
  std::filesystem::path config;
  std::filesystem::path vocab;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;  // overrides the config seed
  std::filesystem::path resume;       // optional checkpoint to continue from
};

struct DecodeArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path vocab;
  std::filesystem::path data;
  std::filesystem::path out;
  int beam_size = 5;
  int max_len = 16;
  std::string mode = "eos";  // "eos" | "fixed"
  bool constrained = false;
  std::uint64_t seed = 0;  // label-group resampling at decode time
};

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path vocab;
  std::filesystem::path data;          // complete records for perplexity (optional)
  std::filesystem::path mention_spec;  // mention eval spec (optional)
  std::filesystem::path out;
  int beam_size = 5;
  int max_len = 16;
};

struct SynthArgs {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
};

// Each command returns a process exit code and reports problems on `err`.
int run_compile_fsa(const CompileFsaArgs& args, std::ostream& out, std::ostream& err);
int run_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int run_decode(const DecodeArgs& args, std::ostream& out, std::ostream& err);
int run_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int run_synth(const SynthArgs& args, std::ostream& out, std::ostream& err);

}  // namespace ps3
