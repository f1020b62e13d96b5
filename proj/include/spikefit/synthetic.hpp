#pragma once

// Ground-truth sampling and dataset generation from the spiked mixture model.

#include <cstdint>
#include <vector>

#include "spikefit/dataio.hpp"
#include "spikefit/linalg.hpp"
#include "spikefit/smm.hpp"

namespace spikefit::synthetic {

struct GroundTruth {
  smm::ModelParams theta;
  std::uint64_t seed = 0;
};

// Spikes have i.i.d. N(0, spike_scale^2) coordinates, weights are a
// Dirichlet(1, ..., 1) draw (normalized Exp(1) variates), noise_var as given.
// sigma_sq = 0 is accepted here for noiseless data even though fitted models
// require a positive noise variance.
GroundTruth sample_ground_truth(std::size_t k, std::size_t d, double sigma_sq, double spike_scale,
                                std::uint64_t seed);

struct Dataset {
  DataMatrix y;
  std::vector<int> z;  // 1-based component labels
  std::vector<double> alpha;
};

// y_i = alpha_i x_{z_i} + eps_i with alpha_i ~ N(0,1), eps_i ~ N(0, sigma^2 I).
// Draw order per observation: z, alpha, then the d noise coordinates.
Dataset generate(const GroundTruth& truth, std::size_t n, std::uint64_t seed);

// Three spikes in the plane with weights (0.58, 0.37, 0.05).
GroundTruth planar_three_spikes(double sigma_sq);

// K=3, d=5, weights (0.62, 0.22, 0.16), spikes drawn with spike_scale.
GroundTruth five_dim_three_spikes(double sigma_sq, double spike_scale, std::uint64_t seed);

// Spike coordinate scale used by synth and the Hausdorff experiment when none
// is given.
inline constexpr double kDefaultSpikeScale = 1.0;
// Default for the noise-bias experiment: spikes weaker than the noise over
// most of the level range.
inline constexpr double kBiasSpikeScale = 0.5;

struct PlantedCube {
  dataio::SpectralCube cube;
  std::vector<int> regions;  // 1-based region of every pixel, pixel order r*W + c
  std::vector<std::vector<double>> spectra;  // planted spike of each region
};

// H x W x B cube split into K contiguous regions (nearest of K seed points).
// Region k has a non-negative spectrum made of two Gaussian bumps on a small
// baseline; pixel values are alpha * spectrum + N(0, noise_sd^2) with alpha
// uniform on [0.5, 1.5]. The band axis is 1..B with unit "index".
PlantedCube planted_region_cube(std::uint32_t height, std::uint32_t width, std::uint32_t bands, std::size_t k,
                                double noise_sd, std::uint64_t seed);

}  // namespace spikefit::synthetic
