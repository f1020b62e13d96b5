#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include "spikefit/baselines.hpp"
#include "spikefit/cli.hpp"
#include "spikefit/dataio.hpp"
#include "spikefit/errors.hpp"
#include "spikefit/metrics.hpp"
#include "spikefit/serialize.hpp"
#include "spikefit/smm.hpp"
#include "spikefit/svg.hpp"
#include "spikefit/synthetic.hpp"

namespace spikefit::cli {

namespace {

using serialize::Json;

struct FitFlags {
  std::size_t k = 3;
  std::string preset = "synthetic";
  std::optional<int> n1, d1, n2, d2;
  std::optional<double> tol;
  double delta = 0.0;
  bool zero_mean = false;

  void attach(CLI::App* app) {
    app->add_option("--k", k, "Number of components")->check(CLI::PositiveNumber);
    app->add_option("--sieve", preset, "Sieving preset")->check(CLI::IsMember({"synthetic", "ims", "hsi"}));
    app->add_option("--n1", n1, "Random starts");
    app->add_option("--d1", d1, "Iterations before sieving");
    app->add_option("--n2", n2, "Starts kept by the sieve");
    app->add_option("--d2", d2, "Iteration cap after sieving");
    app->add_option("--tol", tol, "Stop when the log-likelihood gain falls below this");
    app->add_option("--delta", delta, "Scatter approximation budget (0 = exact)")->check(CLI::NonNegativeNumber);
    app->add_flag("--zero-mean", zero_mean, "Pin GMM means to 0");
  }

  smm::FitConfig config(std::uint64_t seed, unsigned jobs) const {
    smm::FitConfig c = preset == "ims"   ? smm::FitConfig::ims_preset(k)
                       : preset == "hsi" ? smm::FitConfig::hsi_preset(k)
                                         : smm::FitConfig::synthetic_preset(k);
    if (n1) c.sieve.n1 = *n1;
    if (d1) c.sieve.d1 = *d1;
    if (n2) c.sieve.n2 = *n2;
    if (d2) c.sieve.d2 = *d2;
    if (tol) c.conv_threshold = *tol;
    c.approx_delta = delta;
    c.rng_seed = seed;
    c.jobs = jobs;
    c.validate();
    return c;
  }

  baselines::GmmOptions gmm() const {
    baselines::GmmOptions o;
    o.zero_mean = zero_mean;
    return o;
  }
};

// State shared by every subcommand.
struct Common {
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  std::string out;
};

void attach_common(CLI::App* app, Common& c, bool needs_out = true) {
  app->add_option("--seed", c.seed, "Master seed (SPIKEFIT_SEED overrides)");
  app->add_option("--jobs", c.jobs, "Worker threads (0 = all cores)");
  auto* o = app->add_option("--out", c.out, "Output path prefix");
  if (needs_out) o->required();
}

Json options_json(const CLI::App* app) {
  Json j = Json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      if (r.size() == 1) {
        j[name] = r.front();
      } else {
        j[name] = r;
      }
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

// Argument list with --seed replaced by the resolved seed.
std::vector<std::string> resolved_args(const std::vector<std::string>& args, std::uint64_t seed) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--seed") {
      ++i;
      continue;
    }
    if (args[i].rfind("--seed=", 0) == 0) continue;
    out.push_back(args[i]);
  }
  out.push_back("--seed");
  out.push_back(std::to_string(seed));
  return out;
}

// Runs `body` between the pending and final manifest writes.
class Outputs {
 public:
  Outputs(const std::string& prefix, const std::string& sub, const std::vector<std::string>& args,
          std::uint64_t seed, Json config)
      : prefix_(prefix), manifest_(sub, resolved_args(args, seed), seed) {
    manifest_.set_config(std::move(config));
  }

  std::string path(const std::string& suffix) {
    const std::string p = prefix_ + suffix;
    manifest_.add_output(p);
    return p;
  }
  void input(const std::string& p) { manifest_.add_input(p); }
  // Creates the prefix's directory if needed.
  void begin() {
    const auto parent = std::filesystem::path(prefix_).parent_path();
    std::error_code ec;
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    manifest_.write_pending(manifest_path());
  }
  void finish() { manifest_.write_final(manifest_path()); }
  std::string manifest_path() const { return prefix_ + ".manifest.json"; }

 private:
  std::string prefix_;
  RunManifest manifest_;
};

std::vector<double> flat(const std::vector<std::vector<double>>& m) {
  std::vector<double> out;
  for (const auto& r : m) out.insert(out.end(), r.begin(), r.end());
  return out;
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  Common common;
  std::string preset;
  std::size_t k = 3, d = 2, n = 1500;
  double sigma2 = 0.01;
  double spike_scale = synthetic::kDefaultSpikeScale;
};

int run_synth(CLI::App* app, SynthArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  synthetic::GroundTruth truth;
  const bool sigma_given = app->get_option("--sigma2")->count() > 0;
  if (a.preset == "fig2") {
    truth = synthetic::planar_three_spikes(a.sigma2);
    if (app->get_option("--n")->count() == 0) a.n = 1500;
  } else if (a.preset == "fig4") {
    truth = synthetic::five_dim_three_spikes(sigma_given ? a.sigma2 : 1.5, a.spike_scale, a.common.seed);
  } else if (a.preset == "fig3") {
    const bool scale_given = app->get_option("--spike-scale")->count() > 0;
    truth = synthetic::sample_ground_truth(3, 5, sigma_given ? a.sigma2 : 1.0,
                                           scale_given ? a.spike_scale : synthetic::kBiasSpikeScale, a.common.seed);
  } else {
    truth = synthetic::sample_ground_truth(a.k, a.d, a.sigma2, a.spike_scale, a.common.seed);
  }
  truth.seed = a.common.seed;
  Outputs o(a.common.out, "synth", args, a.common.seed, options_json(app));
  const std::string data_path = o.path(".csv");
  const std::string truth_path = o.path(".truth.json");
  const std::string z_path = o.path(".z.csv");
  o.begin();
  const auto ds = synthetic::generate(truth, a.n, mix_seed(a.common.seed, 1));
  dataio::write_data_csv(data_path, ds.y);
  Json tj = serialize::model_to_json(truth.theta);
  tj["seed"] = truth.seed;
  tj["n"] = a.n;
  serialize::write_json(truth_path, tj);
  serialize::write_labels_csv(z_path, ds.z);
  o.finish();
  out << "wrote " << a.n << " observations to " << data_path << '\n';
  return kOk;
}

// --- synth-cube -------------------------------------------------------------

struct CubeArgs {
  Common common;
  std::uint32_t height = 64, width = 64, bands = 16;
  std::size_t k = 3;
  double noise = 0.05;
};

int run_synth_cube(CLI::App* app, CubeArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  Outputs o(a.common.out, "synth-cube", args, a.common.seed, options_json(app));
  const std::string cube_path = o.path(".spkc");
  const std::string regions_path = o.path(".regions.csv");
  o.begin();
  const auto pc = synthetic::planted_region_cube(a.height, a.width, a.bands, a.k, a.noise, a.common.seed);
  dataio::cube_write(pc.cube, cube_path);
  serialize::write_labels_csv(regions_path, pc.regions);
  o.finish();
  out << "wrote " << a.height << "x" << a.width << "x" << a.bands << " cube to " << cube_path << '\n';
  return kOk;
}

// --- fit --------------------------------------------------------------------

struct FitArgs {
  Common common;
  FitFlags fit;
  std::string method = "smm";
  std::string input;
};

int run_fit(CLI::App* app, FitArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  Outputs o(a.common.out, "fit", args, a.common.seed, options_json(app));
  const DataMatrix y = dataio::read_data_csv(a.input);
  o.input(a.input);
  const std::string model_path = o.path(".json");
  const std::string labels_path = o.path(".labels.csv");
  std::string rho_path;
  if (a.method != "kmeans") rho_path = o.path(".rho.csv");
  o.begin();

  if (a.method == "smm") {
    const auto r = smm::fit(y, a.fit.config(a.common.seed, a.common.jobs));
    serialize::write_json(model_path, serialize::fit_to_json(r, a.common.seed));
    serialize::write_responsibilities_csv(rho_path, r.rho);
    serialize::write_labels_csv(labels_path, smm::assign_clusters(r.rho));
    out << "smm: log-likelihood " << metrics::format_double(r.loglik) << ", noise variance "
        << metrics::format_double(r.params.noise_var) << '\n';
  } else if (a.method == "gmm") {
    const auto r = baselines::gmm_fit(y, a.fit.config(a.common.seed, a.common.jobs), a.fit.gmm());
    const auto ex = baselines::extract_spikes(r.params.covs);
    Json j = serialize::gmm_to_json(r.params, ex);
    j["loglik"] = r.loglik;
    j["loglik_trace"] = r.report.starts.at(static_cast<std::size_t>(r.report.winner)).loglik_trace;
    j["zero_mean"] = a.fit.zero_mean;
    j["seed"] = a.common.seed;
    serialize::write_json(model_path, j);
    serialize::write_responsibilities_csv(rho_path, r.rho);
    serialize::write_labels_csv(labels_path, smm::assign_clusters(r.rho));
    out << "gmm: log-likelihood " << metrics::format_double(r.loglik) << ", gap_ok " << (ex.gap_ok ? "true" : "false")
        << '\n';
  } else {
    const auto r = baselines::kmeans_fit(y, a.fit.k, a.common.seed);
    Json j;
    j["centroids"] = r.centroids;
    j["inertia_trace"] = r.inertia_trace;
    j["iterations"] = r.iterations;
    j["seed"] = a.common.seed;
    serialize::write_json(model_path, j);
    serialize::write_labels_csv(labels_path, r.labels);
    out << "kmeans: inertia " << metrics::format_double(r.inertia_trace.back()) << " after " << r.iterations
        << " iterations\n";
  }
  o.finish();
  return kOk;
}

// --- segment ----------------------------------------------------------------

struct SegmentArgs {
  Common common;
  FitFlags fit;
  std::string method = "smm";
  std::string input;
  std::string normalization = "minmax";
  std::string truth;
};

int run_segment(CLI::App* app, SegmentArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  Outputs o(a.common.out, "segment", args, a.common.seed, options_json(app));
  const auto cube = dataio::cube_read(a.input);
  o.input(a.input);
  if (!a.truth.empty()) o.input(a.truth);
  const std::string labels_path = o.path(".labels.csv");
  const std::string pgm_path = o.path(".pgm");
  std::string ppm_path;
  if (a.fit.k <= 16) ppm_path = o.path(".ppm");
  const std::string spectra_path = o.path(".spectra.csv");
  const std::string model_path = o.path(".json");
  o.begin();

  const DataMatrix raw = dataio::flatten(cube);
  const auto [y, record] = dataio::normalize(raw, dataio::parse_norm(a.normalization));

  std::vector<int> labels;
  std::vector<std::vector<double>> spikes;
  Json model;
  if (a.method == "smm") {
    const auto r = smm::fit(y, a.fit.config(a.common.seed, a.common.jobs));
    labels = smm::assign_clusters(r.rho);
    spikes = r.params.spikes;
    model = serialize::fit_to_json(r, a.common.seed);
  } else if (a.method == "gmm") {
    const auto r = baselines::gmm_fit(y, a.fit.config(a.common.seed, a.common.jobs), a.fit.gmm());
    const auto ex = baselines::extract_spikes(r.params.covs);
    labels = smm::assign_clusters(r.rho);
    spikes = ex.spikes_gmm;
    model = serialize::gmm_to_json(r.params, ex);
    model["loglik"] = r.loglik;
  } else {
    const auto r = baselines::kmeans_fit(y, a.fit.k, a.common.seed);
    labels = r.labels;
    spikes = r.centroids;
    model["centroids"] = r.centroids;
    model["inertia_trace"] = r.inertia_trace;
  }
  model["normalization"] = dataio::norm_name(record.kind);
  serialize::write_json(model_path, model);

  if (record.kind == dataio::NormKind::minmax) spikes = dataio::denormalize_spikes(spikes, record);
  std::vector<std::string> header;
  for (double b : cube.band_axis) header.push_back(cube.unit + "=" + metrics::format_double(b));
  dataio::write_matrix_csv(spectra_path, header, flat(spikes), cube.bands);

  serialize::write_labels_csv(labels_path, labels);
  dataio::export_labels_image(labels, static_cast<int>(a.fit.k), cube.height, cube.width,
                              a.common.out);
  o.finish();

  out << a.method << ": segmented " << cube.pixels() << " pixels into " << a.fit.k << " clusters\n";
  if (!a.truth.empty()) {
    const auto ref = serialize::read_labels_csv(a.truth);
    out << "purity " << metrics::format_double(metrics::label_purity(labels, ref)) << '\n';
  }
  return kOk;
}

// --- compare ----------------------------------------------------------------

struct CompareArgs {
  Common common;
  FitFlags fit;
  std::string preset = "fig2";
  double sigma2 = 0.5;
  std::size_t n = 1500;
  bool svg = false;
};

int run_compare(CLI::App* app, CompareArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  Outputs o(a.common.out, "compare", args, a.common.seed, options_json(app));
  const std::string csv_path = o.path(".csv");
  const std::string summary_path = o.path(".summary.json");
  std::string svg_path;
  if (a.svg) svg_path = o.path(".svg");
  o.begin();

  const auto truth = synthetic::planar_three_spikes(a.sigma2);
  const auto c = metrics::compare_methods(truth, a.n, a.common.seed, a.fit.config(a.common.seed, a.common.jobs),
                                          a.fit.gmm());
  {
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) throw ArgumentError("cannot open " + csv_path + " for writing");
    f << "set,component,x1,x2\n";
    const std::pair<const char*, const metrics::SpikeSet*> sets[] = {
        {"truth", &c.truth}, {"smm", &c.smm}, {"gmm", &c.gmm}};
    for (const auto& [name, s] : sets) {
      for (std::size_t k = 0; k < s->size(); ++k) {
        f << name << ',' << k + 1;
        for (double v : (*s)[k]) f << ',' << metrics::format_double(v);
        f << '\n';
      }
    }
  }
  Json sj;
  sj["sigma2"] = a.sigma2;
  sj["smm_noise_var"] = c.smm_noise_var;
  sj["gmm_noise_var"] = c.gmm_noise_var;
  sj["gap_ok"] = c.gap_ok;
  sj["smm_hausdorff_abs_cos"] = c.smm_hausdorff_abs_cos;
  sj["gmm_hausdorff_abs_cos"] = c.gmm_hausdorff_abs_cos;
  sj["smm_hausdorff_sqe_sign_invariant"] = c.smm_hausdorff_sqe;
  sj["gmm_hausdorff_sqe_sign_invariant"] = c.gmm_hausdorff_sqe;
  sj["smm_min_pairwise_abs_cos"] = c.smm_min_pairwise_abs_cos;
  sj["gmm_min_pairwise_abs_cos"] = c.gmm_min_pairwise_abs_cos;
  sj["gmm_zero_mean"] = a.fit.zero_mean;
  serialize::write_json(summary_path, sj);

  if (a.svg) {
    svg::LineChart chart;
    chart.title = "Spike directions, sigma^2 = " + metrics::format_double(a.sigma2);
    chart.x_label = "x1";
    chart.y_label = "x2";
    const std::pair<const char*, const metrics::SpikeSet*> sets[] = {
        {"truth", &c.truth}, {"smm", &c.smm}, {"gmm", &c.gmm}};
    for (const auto& [name, s] : sets) {
      for (std::size_t k = 0; k < s->size(); ++k) {
        const auto& x = (*s)[k];
        chart.series.push_back({std::string(name) + " " + std::to_string(k + 1), {-x[0], x[0]}, {-x[1], x[1]}});
      }
    }
    svg::write(svg_path, chart);
  }
  o.finish();
  out << "hausdorff abs_cos: smm " << metrics::format_double(c.smm_hausdorff_abs_cos) << ", gmm "
      << metrics::format_double(c.gmm_hausdorff_abs_cos) << '\n';
  return kOk;
}

// --- bias-exp ---------------------------------------------------------------

struct BiasArgs {
  Common common;
  FitFlags fit;
  std::string preset = "fig3";
  int levels = 10;
  double lo = 1.0, hi = 30.0;
  int replicates = 10;
  std::size_t n = 1500, d = 5;
  double spike_scale = synthetic::kBiasSpikeScale;
  bool svg = false;
};

int run_bias(CLI::App* app, BiasArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  if (a.levels < 1) throw ArgumentError("--levels must be at least 1");
  if (!(a.hi >= a.lo) || !(a.lo > 0.0)) throw ArgumentError("need 0 < --lo <= --hi");
  Outputs o(a.common.out, "bias-exp", args, a.common.seed, options_json(app));
  const std::string csv_path = o.path(".csv");
  std::string svg_path;
  if (a.svg) svg_path = o.path(".svg");
  o.begin();

  metrics::BiasOptions bo;
  for (int i = 0; i < a.levels; ++i) {
    bo.levels.push_back(a.levels == 1 ? a.lo : a.lo + (a.hi - a.lo) * i / (a.levels - 1));
  }
  bo.replicates = a.replicates;
  bo.n = a.n;
  bo.d = a.d;
  bo.k = a.fit.k;
  bo.spike_scale = a.spike_scale;
  bo.config = a.fit.config(a.common.seed, a.common.jobs);
  bo.gmm = a.fit.gmm();
  const auto rows = metrics::bias_experiment(bo);
  {
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) throw ArgumentError("cannot open " + csv_path + " for writing");
    metrics::write_bias_csv(f, rows);
  }
  if (a.svg) {
    svg::LineChart chart;
    chart.title = "Estimated vs true noise variance";
    chart.x_label = "true sigma^2";
    chart.y_label = "mean estimate";
    svg::Series truth{"truth", {}, {}}, s{"smm", {}, {}}, g{"gmm", {}, {}};
    for (const auto& r : rows) {
      auto& ser = r.method == "smm" ? s : g;
      ser.x.push_back(r.level);
      ser.y.push_back(r.mean);
      if (r.method == "smm") {
        truth.x.push_back(r.level);
        truth.y.push_back(r.level);
      }
    }
    chart.series = {truth, s, g};
    svg::write(svg_path, chart);
  }
  o.finish();
  out << "wrote " << rows.size() << " rows to " << csv_path << '\n';
  return kOk;
}

// --- hausdorff-exp ----------------------------------------------------------

struct HausdorffArgs {
  Common common;
  FitFlags fit;
  std::string preset = "fig4";
  int inits = 100;
  int max_iter = 200;
  std::size_t n = 1500;
  double sigma2 = 1.5;
  double spike_scale = synthetic::kDefaultSpikeScale;
  std::uint64_t truth_seed = 0;
  bool sign_augment = false;
  bool truth_init = false;
  bool svg = false;
};

int run_hausdorff(CLI::App* app, HausdorffArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  Outputs o(a.common.out, "hausdorff-exp", args, a.common.seed, options_json(app));
  const std::string csv_path = o.path(".csv");
  std::string svg_path;
  if (a.svg) svg_path = o.path(".svg");
  o.begin();

  const auto truth = synthetic::five_dim_three_spikes(a.sigma2, a.spike_scale, a.truth_seed);
  metrics::HausdorffOptions ho;
  ho.n = a.n;
  ho.inits = a.inits;
  ho.max_iter = a.max_iter;
  ho.conv_threshold = a.fit.tol.value_or(1e-8);
  ho.data_seed = mix_seed(a.truth_seed, 1);
  ho.init_seed = a.common.seed;
  ho.jobs = a.common.jobs;
  ho.sign_invariant = a.sign_augment;
  ho.truth_init = a.truth_init;
  ho.gmm = a.fit.gmm();
  const auto rows = metrics::hausdorff_experiment(truth, ho);
  {
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) throw ArgumentError("cannot open " + csv_path + " for writing");
    metrics::write_hausdorff_csv(f, rows);
  }
  if (a.svg) {
    svg::LineChart chart;
    chart.title = "Average Hausdorff distance to the true spikes";
    chart.x_label = "iteration";
    chart.y_label = "distance";
    svg::Series ss{"smm sqe", {}, {}}, sc{"smm abs_cos", {}, {}}, gs{"gmm sqe", {}, {}}, gc{"gmm abs_cos", {}, {}};
    for (const auto& r : rows) {
      for (auto* s : {&ss, &sc, &gs, &gc}) s->x.push_back(r.iteration);
      ss.y.push_back(r.smm_sqe);
      sc.y.push_back(r.smm_abs_cos);
      gs.y.push_back(r.gmm_sqe);
      gc.y.push_back(r.gmm_abs_cos);
    }
    chart.series = {ss, sc, gs, gc};
    svg::write(svg_path, chart);
  }
  o.finish();
  const auto& last = rows.back();
  out << "final average: smm sqe " << metrics::format_double(last.smm_sqe) << ", gmm sqe "
      << metrics::format_double(last.gmm_sqe) << ", smm abs_cos " << metrics::format_double(last.smm_abs_cos)
      << ", gmm abs_cos " << metrics::format_double(last.gmm_abs_cos) << '\n';
  return kOk;
}

int run_impl(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool honor_env);

// --- replay -----------------------------------------------------------------

int run_replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  const Json m = serialize::read_json(manifest_path);
  std::vector<std::string> args;
  std::map<std::string, std::string> recorded;
  try {
    args = m.at("args").get<std::vector<std::string>>();
    for (const auto& o : m.at("outputs")) {
      if (o.at("fnv1a64").is_null()) throw ArgumentError("manifest " + manifest_path + " is incomplete");
      recorded[o.at("path").get<std::string>()] = o.at("fnv1a64").get<std::string>();
    }
  } catch (const Json::exception& e) {
    throw ArgumentError("malformed manifest: " + std::string(e.what()));
  }
  const int code = run_impl(args, out, err, false);
  if (code != kOk) return code;
  int mismatches = 0;
  for (const auto& [path, sum] : recorded) {
    const std::string now = file_checksum(path);
    if (now != sum) {
      err << "mismatch: " << path << " recorded " << sum << ", now " << now << '\n';
      ++mismatches;
    }
  }
  if (mismatches) return kNumericFailure;
  out << "replay reproduced " << recorded.size() << " outputs\n";
  return kOk;
}

int run_impl(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool honor_env) {
  CLI::App app{"Spiked mixture model fitting and segmentation", "spikefit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Sample a dataset from the spiked mixture model");
  attach_common(c_synth, synth.common);
  c_synth->add_option("--preset", synth.preset, "Pinned configuration")->check(CLI::IsMember({"fig2", "fig3", "fig4"}));
  c_synth->add_option("--k", synth.k, "Components")->check(CLI::PositiveNumber);
  c_synth->add_option("--d", synth.d, "Dimension")->check(CLI::Range(2, 1 << 20));
  c_synth->add_option("--n", synth.n, "Observations")->check(CLI::PositiveNumber);
  c_synth->add_option("--sigma2", synth.sigma2, "Noise variance")->check(CLI::NonNegativeNumber);
  c_synth->add_option("--spike-scale", synth.spike_scale, "Standard deviation of spike coordinates");

  CubeArgs cube;
  auto* c_cube = app.add_subcommand("synth-cube", "Generate a spectral cube with planted regions");
  attach_common(c_cube, cube.common);
  c_cube->add_option("--height", cube.height)->check(CLI::PositiveNumber);
  c_cube->add_option("--width", cube.width)->check(CLI::PositiveNumber);
  c_cube->add_option("--bands", cube.bands)->check(CLI::Range(2u, 1u << 20));
  c_cube->add_option("--k", cube.k, "Regions")->check(CLI::PositiveNumber);
  c_cube->add_option("--noise", cube.noise, "Noise standard deviation")->check(CLI::NonNegativeNumber);

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit a model to a matrix CSV");
  attach_common(c_fit, fit.common);
  fit.fit.attach(c_fit);
  c_fit->add_option("--method", fit.method)->check(CLI::IsMember({"smm", "gmm", "kmeans"}));
  c_fit->add_option("--input", fit.input, "Matrix CSV, one observation per row")->required();

  SegmentArgs seg;
  auto* c_seg = app.add_subcommand("segment", "Cluster the pixels of a spectral cube");
  attach_common(c_seg, seg.common);
  seg.fit.preset = "hsi";
  seg.fit.attach(c_seg);
  c_seg->add_option("--method", seg.method)->check(CLI::IsMember({"smm", "gmm", "kmeans"}));
  c_seg->add_option("--input", seg.input, "Cube file")->required();
  c_seg->add_option("--normalize", seg.normalization)->check(CLI::IsMember({"none", "minmax", "l1"}));
  c_seg->add_option("--truth", seg.truth, "Reference label CSV; prints the purity");

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "Fit both methods to the planar three-spike configuration");
  attach_common(c_cmp, cmp.common);
  cmp.fit.attach(c_cmp);
  c_cmp->add_option("--preset", cmp.preset)->check(CLI::IsMember({"fig2"}));
  c_cmp->add_option("--sigma2", cmp.sigma2)->check(CLI::PositiveNumber);
  c_cmp->add_option("--n", cmp.n)->check(CLI::PositiveNumber);
  c_cmp->add_flag("--svg", cmp.svg, "Also write an SVG chart");

  BiasArgs bias;
  auto* c_bias = app.add_subcommand("bias-exp", "Noise-variance bias of both methods across noise levels");
  attach_common(c_bias, bias.common);
  bias.fit.attach(c_bias);
  c_bias->add_option("--preset", bias.preset)->check(CLI::IsMember({"fig3"}));
  c_bias->add_option("--levels", bias.levels);
  c_bias->add_option("--lo", bias.lo);
  c_bias->add_option("--hi", bias.hi);
  c_bias->add_option("--replicates", bias.replicates)->check(CLI::PositiveNumber);
  c_bias->add_option("--n", bias.n)->check(CLI::PositiveNumber);
  c_bias->add_option("--d", bias.d)->check(CLI::Range(2, 1 << 20));
  c_bias->add_option("--spike-scale", bias.spike_scale);
  c_bias->add_flag("--svg", bias.svg, "Also write an SVG chart");

  HausdorffArgs hd;
  auto* c_hd = app.add_subcommand("hausdorff-exp", "Average Hausdorff distance per EM iteration");
  attach_common(c_hd, hd.common);
  hd.fit.attach(c_hd);
  c_hd->add_option("--preset", hd.preset)->check(CLI::IsMember({"fig4"}));
  c_hd->add_option("--inits", hd.inits)->check(CLI::PositiveNumber);
  c_hd->add_option("--max-iter", hd.max_iter)->check(CLI::NonNegativeNumber);
  c_hd->add_option("--n", hd.n)->check(CLI::PositiveNumber);
  c_hd->add_option("--sigma2", hd.sigma2)->check(CLI::PositiveNumber);
  c_hd->add_option("--spike-scale", hd.spike_scale);
  c_hd->add_option("--truth-seed", hd.truth_seed, "Seed of the true spikes and the dataset");
  c_hd->add_flag("--sign-augment", hd.sign_augment, "Compare spike sets up to sign");
  c_hd->add_flag("--truth-init", hd.truth_init, "Start every run at the true parameters");
  c_hd->add_flag("--svg", hd.svg, "Also write an SVG chart");

  std::string manifest;
  auto* c_replay = app.add_subcommand("replay", "Rerun a manifest and compare output checksums");
  c_replay->add_option("manifest", manifest, "Manifest JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kArgumentError;
  }

  if (honor_env) {
    if (const char* env = std::getenv("SPIKEFIT_SEED"); env && *env) {
      std::uint64_t s = 0;
      const char* end = env + std::char_traits<char>::length(env);
      const auto res = std::from_chars(env, end, s);
      if (res.ec != std::errc() || res.ptr != end) {
        err << "error: SPIKEFIT_SEED is not an unsigned integer\n";
        return kArgumentError;
      }
      for (Common* c : {&synth.common, &cube.common, &fit.common, &seg.common, &cmp.common, &bias.common,
                        &hd.common}) {
        c->seed = s;
      }
    }
  }

  try {
    if (c_synth->parsed()) return run_synth(c_synth, synth, args, out);
    if (c_cube->parsed()) return run_synth_cube(c_cube, cube, args, out);
    if (c_fit->parsed()) return run_fit(c_fit, fit, args, out);
    if (c_seg->parsed()) return run_segment(c_seg, seg, args, out);
    if (c_cmp->parsed()) return run_compare(c_cmp, cmp, args, out);
    if (c_bias->parsed()) return run_bias(c_bias, bias, args, out);
    if (c_hd->parsed()) return run_hausdorff(c_hd, hd, args, out);
    if (c_replay->parsed()) return run_replay(manifest, out, err);
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kArgumentError;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kArgumentError;
  } catch (const ConvergenceError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const NumericError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericFailure;
  }
  return kArgumentError;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return run_impl(args, out, err, true);
}

}  // namespace spikefit::cli
