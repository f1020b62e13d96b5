#pragma once

// JSON and CSV forms of fitted parameters.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "spikefit/baselines.hpp"
#include "spikefit/smm.hpp"

namespace spikefit::serialize {

using Json = nlohmann::ordered_json;

// {"spikes", "weights", "noise_var"}; support sets are written 1-based.
Json model_to_json(const smm::ModelParams& p);
smm::ModelParams model_from_json(const Json& j);

// Adds "loglik_trace", "support_history", "loglik" and "seed" of the winning start.
Json fit_to_json(const smm::FitResult& r, std::uint64_t seed);

Json gmm_to_json(const baselines::GmmParams& p, const baselines::ExtractedSpikes& ex);
baselines::GmmParams gmm_from_json(const Json& j);

// Writes pretty-printed JSON with a trailing newline.
void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

// Header rho_1..rho_K, one observation per row.
void write_responsibilities_csv(const std::string& path, const smm::Responsibilities& rho);
// Header "label", one 1-based label per row.
void write_labels_csv(const std::string& path, const std::vector<int>& labels);
std::vector<int> read_labels_csv(const std::string& path);

}  // namespace spikefit::serialize
