#include "spikefit/synthetic.hpp"

#include <cmath>
#include <limits>

#include "spikefit/errors.hpp"
#include "spikefit/rng.hpp"

namespace spikefit::synthetic {

GroundTruth sample_ground_truth(std::size_t k, std::size_t d, double sigma_sq, double spike_scale,
                                std::uint64_t seed) {
  if (k < 1) throw ArgumentError("sample_ground_truth: K must be at least 1");
  if (d < 2) throw ArgumentError("sample_ground_truth: d must be at least 2");
  if (!(sigma_sq >= 0.0) || !std::isfinite(sigma_sq)) {
    throw ArgumentError("sample_ground_truth: sigma^2 must be finite and non-negative");
  }
  if (!std::isfinite(spike_scale)) throw ArgumentError("sample_ground_truth: spike_scale must be finite");

  Rng rng(seed);
  Rng spike_rng = rng.split(0);
  Rng weight_rng = rng.split(1);

  GroundTruth g;
  g.seed = seed;
  g.theta.noise_var = sigma_sq;
  g.theta.spikes.assign(k, std::vector<double>(d));
  for (auto& x : g.theta.spikes) {
    for (double& v : x) v = spike_scale * spike_rng.normal();
  }
  g.theta.weights.resize(k);
  double total = 0.0;
  for (double& w : g.theta.weights) {
    w = weight_rng.exponential();
    total += w;
  }
  for (double& w : g.theta.weights) w /= total;
  return g;
}

Dataset generate(const GroundTruth& truth, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("generate: N must be at least 1");
  const auto& th = truth.theta;
  const std::size_t k = th.components();
  const std::size_t d = th.dim();
  if (k < 1 || d < 2) throw ArgumentError("generate: ground truth needs K >= 1 and d >= 2");
  if (!(th.noise_var >= 0.0)) throw ArgumentError("generate: negative noise variance");
  const double sigma = std::sqrt(th.noise_var);

  Rng rng(seed);
  std::vector<double> values(n * d);
  std::vector<int> z(n);
  std::vector<double> alpha(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = rng.categorical(th.weights);
    z[i] = static_cast<int>(c) + 1;
    alpha[i] = rng.normal();
    for (std::size_t f = 0; f < d; ++f) {
      values[i * d + f] = alpha[i] * th.spikes[c][f] + sigma * rng.normal();
    }
  }
  return Dataset{DataMatrix(d, n, std::move(values)), std::move(z), std::move(alpha)};
}

GroundTruth planar_three_spikes(double sigma_sq) {
  GroundTruth g;
  g.theta.spikes = {{0.75, -0.91}, {0.08, -0.75}, {-1.01, -1.08}};
  g.theta.weights = {0.58, 0.37, 0.05};
  g.theta.noise_var = sigma_sq;
  return g;
}

GroundTruth five_dim_three_spikes(double sigma_sq, double spike_scale, std::uint64_t seed) {
  GroundTruth g = sample_ground_truth(3, 5, sigma_sq, spike_scale, seed);
  g.theta.weights = {0.62, 0.22, 0.16};
  return g;
}

}  // namespace spikefit::synthetic

namespace spikefit::synthetic {

PlantedCube planted_region_cube(std::uint32_t height, std::uint32_t width, std::uint32_t bands, std::size_t k,
                                double noise_sd, std::uint64_t seed) {
  if (height < 1 || width < 1) throw ArgumentError("planted_region_cube: empty image");
  if (bands < 2) throw ArgumentError("planted_region_cube: need at least two bands");
  if (k < 1) throw ArgumentError("planted_region_cube: K must be at least 1");
  if (!(noise_sd >= 0.0)) throw ArgumentError("planted_region_cube: noise_sd must be non-negative");
  Rng rng(seed);
  Rng layout_rng = rng.split(0);
  Rng spectrum_rng = rng.split(1);
  Rng pixel_rng = rng.split(2);

  std::vector<std::pair<double, double>> centers(k);
  for (auto& c : centers) c = {layout_rng.uniform() * height, layout_rng.uniform() * width};

  PlantedCube out;
  out.spectra.assign(k, std::vector<double>(bands, 0.0));
  for (auto& s : out.spectra) {
    for (int bump = 0; bump < 2; ++bump) {
      const double center = spectrum_rng.uniform() * (bands - 1);
      const double width_b = 0.5 + spectrum_rng.uniform() * bands / 8.0;
      const double height_b = 0.5 + spectrum_rng.uniform();
      for (std::uint32_t b = 0; b < bands; ++b) {
        const double t = (b - center) / width_b;
        s[b] += height_b * std::exp(-0.5 * t * t);
      }
    }
    for (double& v : s) v += 0.05;
  }

  auto& cube = out.cube;
  cube.height = height;
  cube.width = width;
  cube.bands = bands;
  cube.unit = "index";
  cube.band_axis.resize(bands);
  for (std::uint32_t b = 0; b < bands; ++b) cube.band_axis[b] = b + 1.0;
  cube.values.resize(static_cast<std::size_t>(height) * width * bands);
  out.regions.resize(static_cast<std::size_t>(height) * width);
  for (std::uint32_t r = 0; r < height; ++r) {
    for (std::uint32_t c = 0; c < width; ++c) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const double dr = r + 0.5 - centers[j].first;
        const double dc = c + 0.5 - centers[j].second;
        const double dist = dr * dr + dc * dc;
        if (dist < best_d) {
          best_d = dist;
          best = j;
        }
      }
      const std::size_t p = static_cast<std::size_t>(r) * width + c;
      out.regions[p] = static_cast<int>(best) + 1;
      const double alpha = 0.5 + pixel_rng.uniform();
      for (std::uint32_t b = 0; b < bands; ++b) {
        cube.values[p * bands + b] = static_cast<float>(alpha * out.spectra[best][b] + noise_sd * pixel_rng.normal());
      }
    }
  }
  return out;
}

}  // namespace spikefit::synthetic
