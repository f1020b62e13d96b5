#include "spikefit/serialize.hpp"

#include <fstream>

#include "spikefit/dataio.hpp"
#include "spikefit/errors.hpp"

namespace spikefit::serialize {

namespace {

std::vector<std::vector<double>> matrix_of(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) throw ArgumentError(std::string("JSON is missing array '") + key + "'");
  return j[key].get<std::vector<std::vector<double>>>();
}

Json support_json(const smm::SupportSet& s) {
  Json a = Json::array();
  for (std::size_t m : s) a.push_back(m + 1);
  return a;
}

}  // namespace

Json model_to_json(const smm::ModelParams& p) {
  Json j;
  j["spikes"] = p.spikes;
  j["weights"] = p.weights;
  j["noise_var"] = p.noise_var;
  return j;
}

smm::ModelParams model_from_json(const Json& j) {
  try {
    smm::ModelParams p;
    p.spikes = matrix_of(j, "spikes");
    p.weights = j.at("weights").get<std::vector<double>>();
    p.noise_var = j.at("noise_var").get<double>();
    p.validate();
    return p;
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("malformed model JSON: ") + e.what());
  }
}

Json fit_to_json(const smm::FitResult& r, std::uint64_t seed) {
  Json j = model_to_json(r.params);
  const auto& win = r.report.starts.at(static_cast<std::size_t>(r.report.winner));
  j["loglik"] = r.loglik;
  j["loglik_trace"] = win.loglik_trace;
  Json hist = Json::array();
  for (const auto& s : win.support_history) hist.push_back(support_json(s));
  j["support_history"] = hist;
  j["winner_start"] = r.report.winner;
  j["survivors"] = r.report.survivors;
  j["seed"] = seed;
  return j;
}

Json gmm_to_json(const baselines::GmmParams& p, const baselines::ExtractedSpikes& ex) {
  Json j;
  j["means"] = p.means;
  Json covs = Json::array();
  for (const auto& c : p.covs) {
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < c.dim(); ++r) rows.emplace_back(c.row(r).begin(), c.row(r).end());
    covs.push_back(rows);
  }
  j["covs"] = covs;
  j["weights"] = p.weights;
  j["sigma_sq_gmm"] = ex.sigma_sq_gmm;
  j["spikes_gmm"] = ex.spikes_gmm;
  j["gap_ok"] = ex.gap_ok;
  return j;
}

baselines::GmmParams gmm_from_json(const Json& j) {
  try {
    baselines::GmmParams p;
    p.means = matrix_of(j, "means");
    p.weights = j.at("weights").get<std::vector<double>>();
    for (const auto& c : j.at("covs")) {
      const auto rows = c.get<std::vector<std::vector<double>>>();
      std::vector<double> flat;
      for (const auto& r : rows) {
        if (r.size() != rows.size()) throw ArgumentError("covariance is not square");
        flat.insert(flat.end(), r.begin(), r.end());
      }
      p.covs.emplace_back(rows.size(), std::move(flat));
    }
    p.validate();
    return p;
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("malformed GMM JSON: ") + e.what());
  }
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

Json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("invalid JSON in ") + path, e.byte);
  }
}

void write_responsibilities_csv(const std::string& path, const smm::Responsibilities& rho) {
  std::vector<std::string> header;
  for (std::size_t k = 0; k < rho.components(); ++k) header.push_back("rho_" + std::to_string(k + 1));
  dataio::write_matrix_csv(path, header, rho.values(), rho.components());
}

void write_labels_csv(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot open " + path + " for writing");
  out << "label\n";
  for (int l : labels) out << l << '\n';
}

std::vector<int> read_labels_csv(const std::string& path) {
  const auto m = dataio::read_matrix_csv(path);
  if (m.cols != 1) throw FormatError("label CSV must have one column", 0);
  std::vector<int> out;
  out.reserve(m.rows);
  for (double v : m.values) out.push_back(static_cast<int>(v));
  return out;
}

}  // namespace spikefit::serialize
