#include <cstdio>
#include <fstream>

#include "spikefit/cli.hpp"
#include "spikefit/errors.hpp"

namespace spikefit::cli {

std::string file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    const auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

RunManifest::RunManifest(std::string subcommand, std::vector<std::string> args, std::uint64_t seed)
    : subcommand_(std::move(subcommand)), args_(std::move(args)), seed_(seed), config_(serialize::Json::object()) {}

void RunManifest::add_input(const std::string& path) {
  inputs_.emplace_back(path, file_checksum(path));
}

serialize::Json RunManifest::to_json(bool with_outputs) const {
  serialize::Json j;
  j["tool"] = "spikefit";
  j["subcommand"] = subcommand_;
  j["args"] = args_;
  j["seed"] = seed_;
  j["config"] = config_;
  serialize::Json in = serialize::Json::array();
  for (const auto& [p, c] : inputs_) in.push_back({{"path", p}, {"fnv1a64", c}});
  j["inputs"] = in;
  serialize::Json out = serialize::Json::array();
  for (const auto& p : outputs_) {
    if (with_outputs) {
      out.push_back({{"path", p}, {"fnv1a64", file_checksum(p)}});
    } else {
      out.push_back({{"path", p}, {"fnv1a64", nullptr}});
    }
  }
  j["outputs"] = out;
  return j;
}

void RunManifest::write_pending(const std::string& path) const {
  serialize::write_json(path, to_json(false));
}

void RunManifest::write_final(const std::string& path) const {
  serialize::write_json(path, to_json(true));
}

}  // namespace spikefit::cli
