#include "spikefit/dataio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <sstream>

#include "spikefit/errors.hpp"
#include "spikefit/metrics.hpp"

namespace spikefit::dataio {

namespace {

constexpr char kMagic[4] = {'S', 'P', 'K', 'C'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put_le(std::string& buf, T v) {
  std::uint64_t bits;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(v);
  } else if constexpr (std::is_same_v<T, float>) {
    bits = std::bit_cast<std::uint32_t>(v);
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw FormatError(std::string("truncated ") + what, pos_);
  }

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(bits);
    } else if constexpr (std::is_same_v<T, float>) {
      return std::bit_cast<float>(static_cast<std::uint32_t>(bits));
    } else {
      return static_cast<T>(bits);
    }
  }

  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path);
  return in;
}

std::string slurp(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

void SpectralCube::validate() const {
  if (pixels() < 1) throw ArgumentError("cube needs at least one pixel");
  if (bands < 2) throw ArgumentError("cube needs at least two bands");
  if (band_axis.size() != bands) throw ArgumentError("band axis length differs from band count");
  if (values.size() != pixels() * bands) throw ArgumentError("cube payload has the wrong size");
  for (std::size_t b = 0; b < bands; ++b) {
    if (!std::isfinite(band_axis[b])) throw ArgumentError("band axis is not finite");
    if (b > 0 && !(band_axis[b] > band_axis[b - 1])) throw ArgumentError("band axis is not strictly increasing");
  }
  for (float v : values) {
    if (!std::isfinite(v)) throw ArgumentError("cube contains a non-finite value");
  }
}

void cube_write(const SpectralCube& cube, std::ostream& out) {
  cube.validate();
  if (cube.unit.size() > std::numeric_limits<std::uint32_t>::max()) throw ArgumentError("unit label too long");
  std::string buf(kMagic, 4);
  put_le<std::uint16_t>(buf, kVersion);
  put_le<std::uint32_t>(buf, cube.height);
  put_le<std::uint32_t>(buf, cube.width);
  put_le<std::uint32_t>(buf, cube.bands);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(cube.unit.size()));
  buf += cube.unit;
  for (double v : cube.band_axis) put_le(buf, v);
  buf.reserve(buf.size() + cube.values.size() * 4);
  for (float v : cube.values) put_le(buf, v);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw ArgumentError("write failed");
}

void cube_write(const SpectralCube& cube, const std::string& path) {
  auto out = open_out(path);
  cube_write(cube, out);
}

SpectralCube cube_read(std::istream& in) {
  const std::string data = slurp(in);
  Reader r(data);
  const std::string magic = r.bytes(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("bad magic, expected SPKC", 0);
  const auto version_at = r.offset();
  const auto version = r.get<std::uint16_t>("version");
  if (version != kVersion) throw FormatError("unsupported version " + std::to_string(version), version_at);

  SpectralCube cube;
  const auto dims_at = r.offset();
  cube.height = r.get<std::uint32_t>("height");
  cube.width = r.get<std::uint32_t>("width");
  cube.bands = r.get<std::uint32_t>("band count");
  if (cube.pixels() < 1) throw FormatError("cube has no pixels", dims_at);
  if (cube.bands < 2) throw FormatError("cube needs at least two bands", dims_at + 8);

  const auto unit_at = r.offset();
  const auto unit_len = r.get<std::uint32_t>("unit length");
  if (unit_len > r.remaining()) throw FormatError("unit label runs past end of file", unit_at);
  cube.unit = r.bytes(unit_len, "unit label");

  const std::uint64_t count = static_cast<std::uint64_t>(cube.height) * cube.width * cube.bands;
  const std::uint64_t needed = static_cast<std::uint64_t>(cube.bands) * 8 + count * 4;
  if (needed > r.remaining()) {
    throw FormatError("payload truncated: need " + std::to_string(needed) + " bytes, have " +
                          std::to_string(r.remaining()),
                      r.offset());
  }
  cube.band_axis.resize(cube.bands);
  for (std::size_t b = 0; b < cube.bands; ++b) {
    const auto at = r.offset();
    cube.band_axis[b] = r.get<double>("band axis");
    if (!std::isfinite(cube.band_axis[b]) || (b > 0 && !(cube.band_axis[b] > cube.band_axis[b - 1]))) {
      throw FormatError("band axis must be finite and strictly increasing", at);
    }
  }
  cube.values.resize(count);
  for (auto& v : cube.values) {
    const auto at = r.offset();
    v = r.get<float>("payload");
    if (!std::isfinite(v)) throw FormatError("non-finite value in payload", at);
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after payload", r.offset());
  return cube;
}

SpectralCube cube_read(const std::string& path) {
  auto in = open_in(path);
  return cube_read(in);
}

DataMatrix flatten(const SpectralCube& cube) {
  cube.validate();
  std::vector<double> values(cube.values.begin(), cube.values.end());
  return DataMatrix(cube.bands, cube.pixels(), std::move(values));
}

SpectralCube unflatten(const DataMatrix& m, std::uint32_t height, std::uint32_t width,
                       std::vector<double> band_axis, std::string unit) {
  if (static_cast<std::size_t>(height) * width != m.count()) throw ArgumentError("unflatten: H*W differs from N");
  SpectralCube cube;
  cube.height = height;
  cube.width = width;
  cube.bands = static_cast<std::uint32_t>(m.dim());
  cube.band_axis = std::move(band_axis);
  cube.unit = std::move(unit);
  cube.values.assign(m.values().begin(), m.values().end());
  cube.validate();
  return cube;
}

const char* norm_name(NormKind k) noexcept {
  switch (k) {
    case NormKind::minmax:
      return "minmax";
    case NormKind::l1:
      return "l1";
    default:
      return "none";
  }
}

NormKind parse_norm(const std::string& name) {
  if (name == "none") return NormKind::none;
  if (name == "minmax") return NormKind::minmax;
  if (name == "l1") return NormKind::l1;
  throw ArgumentError("unknown normalization '" + name + "' (expected none, minmax or l1)");
}

std::pair<DataMatrix, NormalizationRecord> minmax_normalize(const DataMatrix& m) {
  const std::size_t d = m.dim();
  const std::size_t n = m.count();
  NormalizationRecord rec;
  rec.kind = NormKind::minmax;
  rec.mins.assign(d, std::numeric_limits<double>::infinity());
  rec.maxes.assign(d, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < d; ++f) {
      rec.mins[f] = std::min(rec.mins[f], m(i, f));
      rec.maxes[f] = std::max(rec.maxes[f], m(i, f));
    }
  }
  rec.constant.resize(d);
  for (std::size_t f = 0; f < d; ++f) rec.constant[f] = rec.maxes[f] == rec.mins[f];
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < d; ++f) {
      out[i * d + f] = rec.constant[f] ? 0.0 : (m(i, f) - rec.mins[f]) / (rec.maxes[f] - rec.mins[f]);
    }
  }
  return {DataMatrix(d, n, std::move(out)), std::move(rec)};
}

std::pair<DataMatrix, NormalizationRecord> l1_normalize(const DataMatrix& m) {
  const std::size_t d = m.dim();
  const std::size_t n = m.count();
  NormalizationRecord rec;
  rec.kind = NormKind::l1;
  rec.norms.resize(n);
  rec.zero_rows.resize(n);
  std::vector<double> out(m.values().begin(), m.values().end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t f = 0; f < d; ++f) s += std::abs(m(i, f));
    rec.norms[i] = s;
    rec.zero_rows[i] = s == 0.0;
    if (s > 0.0) {
      for (std::size_t f = 0; f < d; ++f) out[i * d + f] /= s;
    }
  }
  return {DataMatrix(d, n, std::move(out)), std::move(rec)};
}

std::pair<DataMatrix, NormalizationRecord> normalize(const DataMatrix& m, NormKind kind) {
  switch (kind) {
    case NormKind::minmax:
      return minmax_normalize(m);
    case NormKind::l1:
      return l1_normalize(m);
    default:
      return {m, NormalizationRecord{}};
  }
}

DataMatrix denormalize(const DataMatrix& m, const NormalizationRecord& rec) {
  const std::size_t d = m.dim();
  const std::size_t n = m.count();
  std::vector<double> out(m.values().begin(), m.values().end());
  if (rec.kind == NormKind::minmax) {
    if (rec.mins.size() != d) throw ArgumentError("denormalize: record has the wrong feature count");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < d; ++f) {
        out[i * d + f] = rec.constant[f] ? rec.mins[f] : rec.mins[f] + m(i, f) * (rec.maxes[f] - rec.mins[f]);
      }
    }
  } else if (rec.kind == NormKind::l1) {
    if (rec.norms.size() != n) throw ArgumentError("denormalize: record has the wrong observation count");
    for (std::size_t i = 0; i < n; ++i) {
      if (rec.zero_rows[i]) continue;
      for (std::size_t f = 0; f < d; ++f) out[i * d + f] *= rec.norms[i];
    }
  }
  return DataMatrix(d, n, std::move(out));
}

std::vector<std::vector<double>> denormalize_spikes(const std::vector<std::vector<double>>& spikes,
                                                    const NormalizationRecord& rec) {
  if (rec.kind != NormKind::minmax) throw ArgumentError("denormalize_spikes: record is not min-max");
  std::vector<std::vector<double>> out = spikes;
  for (auto& x : out) {
    if (x.size() != rec.mins.size()) throw ArgumentError("denormalize_spikes: dimension mismatch");
    for (std::size_t f = 0; f < x.size(); ++f) {
      x[f] = rec.constant[f] ? rec.mins[f] : rec.mins[f] + x[f] * (rec.maxes[f] - rec.mins[f]);
    }
  }
  return out;
}

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& header, std::span<const double> values,
                      std::size_t cols) {
  if (cols == 0 || header.size() != cols || values.size() % cols != 0) {
    throw ArgumentError("write_matrix_csv: header and values disagree on the column count");
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (header[c].find_first_of(",\"\r\n") != std::string::npos) throw ArgumentError("CSV header needs quoting");
    out << (c ? "," : "") << header[c];
  }
  out << '\n';
  for (std::size_t i = 0; i < values.size(); i += cols) {
    for (std::size_t c = 0; c < cols; ++c) out << (c ? "," : "") << metrics::format_double(values[i + c]);
    out << '\n';
  }
}

void write_matrix_csv(const std::string& path, const std::vector<std::string>& header,
                      std::span<const double> values, std::size_t cols) {
  auto out = open_out(path);
  write_matrix_csv(out, header, values, cols);
}

CsvMatrix read_matrix_csv(std::istream& in) {
  const std::string data = slurp(in);
  CsvMatrix m;
  std::size_t pos = 0;
  bool header_done = false;
  while (pos < data.size()) {
    const std::size_t line_start = pos;
    std::size_t end = data.find('\n', pos);
    if (end == std::string::npos) end = data.size();
    std::size_t stop = end;
    if (stop > line_start && data[stop - 1] == '\r') --stop;
    pos = end + 1;
    if (stop == line_start) continue;  // blank line
    std::vector<std::pair<std::size_t, std::size_t>> fields;
    std::size_t f0 = line_start;
    for (std::size_t i = line_start; i <= stop; ++i) {
      if (i == stop || data[i] == ',') {
        fields.emplace_back(f0, i);
        f0 = i + 1;
      } else if (data[i] == '"') {
        throw FormatError("quoted CSV fields are not supported", i);
      }
    }
    if (!header_done) {
      for (auto [a, b] : fields) m.header.push_back(data.substr(a, b - a));
      m.cols = fields.size();
      header_done = true;
      continue;
    }
    if (fields.size() != m.cols) {
      throw FormatError("row has " + std::to_string(fields.size()) + " fields, expected " + std::to_string(m.cols),
                        line_start);
    }
    for (auto [a, b] : fields) {
      while (a < b && data[a] == ' ') ++a;
      while (b > a && data[b - 1] == ' ') --b;
      double v = 0.0;
      const auto res = std::from_chars(data.data() + a, data.data() + b, v);
      if (res.ec != std::errc() || res.ptr != data.data() + b || !std::isfinite(v)) {
        throw FormatError("not a finite number: '" + data.substr(a, b - a) + "'", a);
      }
      m.values.push_back(v);
    }
    ++m.rows;
  }
  if (!header_done) throw FormatError("empty CSV file", 0);
  return m;
}

CsvMatrix read_matrix_csv(const std::string& path) {
  auto in = open_in(path);
  return read_matrix_csv(in);
}

void write_data_csv(const std::string& path, const DataMatrix& m) {
  std::vector<std::string> header;
  for (std::size_t f = 0; f < m.dim(); ++f) header.push_back("x" + std::to_string(f + 1));
  write_matrix_csv(path, header, m.values(), m.dim());
}

DataMatrix read_data_csv(const std::string& path) {
  CsvMatrix c = read_matrix_csv(path);
  if (c.rows < 1) throw FormatError("CSV has no data rows", 0);
  if (c.cols < 2) throw FormatError("CSV needs at least two columns", 0);
  return DataMatrix(c.cols, c.rows, std::move(c.values));
}

std::uint8_t label_gray(int label, int k) {
  if (k <= 1) return 0;
  return static_cast<std::uint8_t>(std::lround(255.0 * (label - 1) / (k - 1)));
}

LabelImageFiles export_labels_image(const std::vector<int>& labels, int k, std::uint32_t height,
                                    std::uint32_t width, const std::string& stem) {
  if (labels.size() != static_cast<std::size_t>(height) * width) {
    throw ArgumentError("export_labels_image: " + std::to_string(labels.size()) + " labels for a " +
                        std::to_string(height) + "x" + std::to_string(width) + " image");
  }
  if (k < 1 || k > 256) throw ArgumentError("export_labels_image: K must be in 1..256");
  for (int l : labels) {
    if (l < 1 || l > k) throw ArgumentError("export_labels_image: label out of range");
  }
  LabelImageFiles files;
  files.pgm = stem + ".pgm";
  {
    auto out = open_out(files.pgm);
    out << "P5\n" << width << ' ' << height << "\n255\n";
    std::string px(labels.size(), '\0');
    for (std::size_t i = 0; i < labels.size(); ++i) px[i] = static_cast<char>(label_gray(labels[i], k));
    out.write(px.data(), static_cast<std::streamsize>(px.size()));
  }
  if (k > 16) {
    files.palette_overflow = true;
    std::cerr << "warning: " << k << " labels exceed the 16-color palette; wrote grayscale only\n";
    return files;
  }
  files.ppm = stem + ".ppm";
  auto out = open_out(files.ppm);
  out << "P6\n" << width << ' ' << height << "\n255\n";
  std::string px(labels.size() * 3, '\0');
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (int ch = 0; ch < 3; ++ch) px[i * 3 + ch] = static_cast<char>(kPalette[labels[i] - 1][ch]);
  }
  out.write(px.data(), static_cast<std::streamsize>(px.size()));
  return files;
}

PnmImage read_pnm(std::istream& in) {
  const std::string data = slurp(in);
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    unsigned long v = 0;
    const auto res = std::from_chars(data.data() + pos, data.data() + data.size(), v);
    if (res.ec != std::errc() || res.ptr == data.data() + start) throw FormatError(std::string("bad ") + what, start);
    pos = static_cast<std::size_t>(res.ptr - data.data());
    return v;
  };
  if (data.size() < 2 || data[0] != 'P' || (data[1] != '5' && data[1] != '6')) {
    throw FormatError("not a binary PGM/PPM file", 0);
  }
  PnmImage img;
  img.channels = data[1] == '5' ? 1 : 3;
  pos = 2;
  const unsigned long w = read_uint("width");
  const unsigned long h = read_uint("height");
  const std::size_t maxval_at = pos;
  const unsigned long maxval = read_uint("maxval");
  if (maxval == 0 || maxval > 255) throw FormatError("only 8-bit images are supported", maxval_at);
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos]))) {
    throw FormatError("missing separator before pixel data", pos);
  }
  ++pos;
  if (w > std::numeric_limits<std::uint32_t>::max() || h > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("image dimensions overflow", 2);
  }
  const std::uint64_t count = static_cast<std::uint64_t>(w) * h * static_cast<std::uint64_t>(img.channels);
  if (data.size() - pos != count) {
    throw FormatError("pixel data has " + std::to_string(data.size() - pos) + " bytes, expected " +
                          std::to_string(count),
                      pos);
  }
  img.width = static_cast<std::uint32_t>(w);
  img.height = static_cast<std::uint32_t>(h);
  img.maxval = static_cast<int>(maxval);
  img.pixels.assign(data.begin() + static_cast<std::ptrdiff_t>(pos), data.end());
  return img;
}

PnmImage read_pnm(const std::string& path) {
  auto in = open_in(path);
  return read_pnm(in);
}

std::vector<int> labels_from_pnm(const PnmImage& img, int k) {
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    int found = 0;
    for (int l = 1; l <= k && !found; ++l) {
      if (img.channels == 1) {
        if (img.pixels[i] == label_gray(l, k)) found = l;
      } else if (l <= 16) {
        const auto* p = &img.pixels[i * 3];
        if (p[0] == kPalette[l - 1][0] && p[1] == kPalette[l - 1][1] && p[2] == kPalette[l - 1][2]) found = l;
      }
    }
    if (!found) throw FormatError("pixel value matches no label", i * static_cast<std::size_t>(img.channels));
    labels[i] = found;
  }
  return labels;
}

}  // namespace spikefit::dataio
