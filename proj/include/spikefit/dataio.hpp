#pragma once

// Spectral cubes, normalizations and file formats for the segmentation
// pipeline.
//
// Cube file layout (all integers and floats little-endian):
//   "SPKC"  magic, 4 bytes
//   u16     version (1)
//   u32     H, u32 W, u32 B
//   u32     unit label length L, then L bytes of UTF-8
//   f64[B]  band axis, strictly increasing
//   f32[H*W*B] values, pixel-major (row r, column c at pixel r*W + c), band-minor

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "spikefit/linalg.hpp"

namespace spikefit::dataio {

struct SpectralCube {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t bands = 0;
  std::vector<float> values;  // H*W*B
  std::vector<double> band_axis;
  std::string unit;

  std::size_t pixels() const noexcept { return static_cast<std::size_t>(height) * width; }
  float at(std::size_t r, std::size_t c, std::size_t b) const { return values[(r * width + c) * bands + b]; }
  // Throws ArgumentError on a violated invariant.
  void validate() const;
};

void cube_write(const SpectralCube& cube, const std::string& path);
void cube_write(const SpectralCube& cube, std::ostream& out);
// Throws FormatError (with the byte offset) on malformed contents and
// ArgumentError when the file cannot be opened.
SpectralCube cube_read(const std::string& path);
SpectralCube cube_read(std::istream& in);

// One observation per pixel, pixel r*W + c, bands as features.
DataMatrix flatten(const SpectralCube& cube);
// Inverse of flatten; values are rounded to f32.
SpectralCube unflatten(const DataMatrix& m, std::uint32_t height, std::uint32_t width,
                       std::vector<double> band_axis, std::string unit);

enum class NormKind { none, minmax, l1 };
const char* norm_name(NormKind k) noexcept;
NormKind parse_norm(const std::string& name);

struct NormalizationRecord {
  NormKind kind = NormKind::none;
  std::vector<double> mins;          // min-max: per feature
  std::vector<double> maxes;         // min-max: per feature
  std::vector<bool> constant;        // min-max: feature had max == min
  std::vector<double> norms;         // l1: per observation
  std::vector<bool> zero_rows;       // l1: observation had norm 0
};

std::pair<DataMatrix, NormalizationRecord> minmax_normalize(const DataMatrix& m);
std::pair<DataMatrix, NormalizationRecord> l1_normalize(const DataMatrix& m);
std::pair<DataMatrix, NormalizationRecord> normalize(const DataMatrix& m, NormKind kind);
DataMatrix denormalize(const DataMatrix& m, const NormalizationRecord& record);

// Applies the inverse min-max map feature-wise to each spike. Throws
// ArgumentError unless the record is min-max.
std::vector<std::vector<double>> denormalize_spikes(const std::vector<std::vector<double>>& spikes,
                                                    const NormalizationRecord& record);

// Matrix CSV: a header row, then one observation per row.
void write_matrix_csv(std::ostream& out, const std::vector<std::string>& header, std::span<const double> values,
                      std::size_t cols);
void write_matrix_csv(const std::string& path, const std::vector<std::string>& header,
                      std::span<const double> values, std::size_t cols);
struct CsvMatrix {
  std::vector<std::string> header;
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
};
CsvMatrix read_matrix_csv(const std::string& path);
CsvMatrix read_matrix_csv(std::istream& in);
// Data matrix with a header x1..xd.
void write_data_csv(const std::string& path, const DataMatrix& m);
DataMatrix read_data_csv(const std::string& path);

// Fixed 16-entry RGB palette; label k (1-based) uses entry k-1.
inline constexpr std::uint8_t kPalette[16][3] = {
    {230, 25, 75},   {60, 180, 75},   {255, 225, 25}, {0, 130, 200},  {245, 130, 48}, {145, 30, 180},
    {70, 240, 240},  {240, 50, 230},  {210, 245, 60}, {250, 190, 212}, {0, 128, 128}, {220, 190, 255},
    {170, 110, 40},  {255, 250, 200}, {128, 0, 0},    {0, 0, 128}};

// Gray level of label k out of K labels: round(255 * (k-1) / (K-1)), or 0 when K = 1.
std::uint8_t label_gray(int label, int k);

struct LabelImageFiles {
  std::string pgm;
  std::string ppm;  // empty when K > 16
  bool palette_overflow = false;
};

// Writes <stem>.pgm and, for K <= 16, <stem>.ppm. Labels are 1..K.
LabelImageFiles export_labels_image(const std::vector<int>& labels, int k, std::uint32_t height,
                                    std::uint32_t width, const std::string& stem);

struct PnmImage {
  int channels = 1;  // 1 for P5, 3 for P6
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  int maxval = 255;
  std::vector<std::uint8_t> pixels;
};
PnmImage read_pnm(const std::string& path);
PnmImage read_pnm(std::istream& in);

// Maps a re-read label image back to labels: gray levels via label_gray,
// colors via the palette. Throws FormatError on an unknown value.
std::vector<int> labels_from_pnm(const PnmImage& img, int k);

}  // namespace spikefit::dataio
