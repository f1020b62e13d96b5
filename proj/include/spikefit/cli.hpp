#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spikefit/serialize.hpp"

namespace spikefit::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kArgumentError = 2;
inline constexpr int kNumericFailure = 3;

// Runs one command line (without the program name). SPIKEFIT_SEED in the
// environment overrides --seed.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// FNV-1a 64-bit hash of a file's bytes, as 16 hex digits.
std::string file_checksum(const std::string& path);

// Record of one run: the resolved argument list (seed included), the option
// values, and checksums of inputs and outputs.
class RunManifest {
 public:
  RunManifest(std::string subcommand, std::vector<std::string> args, std::uint64_t seed);

  void set_config(serialize::Json config) { config_ = std::move(config); }
  void add_input(const std::string& path);
  void add_output(const std::string& path) { outputs_.push_back(path); }

  // Writes the manifest with output checksums left null.
  void write_pending(const std::string& path) const;
  // Rewrites the manifest with checksums of every output.
  void write_final(const std::string& path) const;

  const std::vector<std::string>& args() const noexcept { return args_; }

 private:
  serialize::Json to_json(bool with_outputs) const;

  std::string subcommand_;
  std::vector<std::string> args_;
  std::uint64_t seed_;
  serialize::Json config_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> outputs_;
};

}  // namespace spikefit::cli
