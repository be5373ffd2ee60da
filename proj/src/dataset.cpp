#include "aecbir/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "aecbir/binary_io.hpp"
#include "aecbir/error.hpp"
#include "aecbir/parallel.hpp"
#include "aecbir/rng.hpp"

namespace aecbir {

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < kMinSide || height < kMinSide) {
    throw InvalidArgument("image must be at least 3x3, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument("pixel count does not match image dimensions");
  }
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : GrayImage(width, height,
                std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                              static_cast<std::size_t>(std::max(height, 0)),
                                          fill)) {}

// --- portable graymap ------------------------------------------------------

namespace {

class PgmTokenizer {
 public:
  PgmTokenizer(std::span<const std::uint8_t> bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  // Next whitespace-separated header integer, skipping '#' comments.
  long next_int(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) ++pos_;
    if (start == pos_) {
      throw FormatError(source_ + ": malformed header (expected " + what + ")");
    }
    long value = 0;
    const auto* first = reinterpret_cast<const char*>(bytes_.data() + start);
    const auto* last = reinterpret_cast<const char*>(bytes_.data() + pos_);
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      throw FormatError(source_ + ": malformed header (bad " + std::string(what) + ")");
    }
    return value;
  }

  // After maxval exactly one whitespace byte precedes the raster.
  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError(source_ + ": malformed header (missing raster separator)");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage parse_pgm(std::span<const std::uint8_t> bytes, const std::string& source) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw FormatError(source + ": malformed header (not a netpbm file)");
  }
  const char kind = static_cast<char>(bytes[1]);
  if (kind == '3' || kind == '6') {
    throw FormatError(source + ": non-grayscale payload (colour pixmap)");
  }
  if (kind == '1' || kind == '4' || kind == '7') {
    throw FormatError(source + ": non-grayscale payload (unsupported netpbm variant)");
  }
  if (kind != '2' && kind != '5') {
    throw FormatError(source + ": malformed header (unknown netpbm magic)");
  }

  PgmTokenizer tok(bytes.subspan(2), source);
  const long width = tok.next_int("width");
  const long height = tok.next_int("height");
  const long maxval = tok.next_int("maxval");
  if (maxval > 255) throw FormatError(source + ": unsupported bit depth (maxval " +
                                      std::to_string(maxval) + ")");
  if (maxval < 1) throw FormatError(source + ": malformed header (maxval 0)");
  if (width < GrayImage::kMinSide || height < GrayImage::kMinSide || width > 1 << 16 ||
      height > 1 << 16) {
    throw FormatError(source + ": unsupported dimensions " + std::to_string(width) + "x" +
                      std::to_string(height));
  }

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<std::uint8_t> pixels(count);
  if (kind == '5') {
    tok.single_whitespace();
    const std::size_t offset = 2 + tok.pos();
    if (bytes.size() - offset < count) throw FormatError(source + ": truncated raster");
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(offset), count, pixels.begin());
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const long v = tok.next_int("pixel value");
      if (v > maxval) throw FormatError(source + ": pixel value exceeds maxval");
      pixels[i] = static_cast<std::uint8_t>(v);
    }
  }
  if (kind == '5') {
    for (std::uint8_t v : pixels) {
      if (v > maxval) throw FormatError(source + ": pixel value exceeds maxval");
    }
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

GrayImage load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("missing file '" + path.string() + "'");
  }
  return parse_pgm(io::read_file(path), path.string());
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  const auto px = image.pixels();
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

// --- IRMA codes ------------------------------------------------------------

namespace {

bool irma_symbol(char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z'); }

}  // namespace

IrmaCode parse_irma_code(std::string_view text) {
  std::string compact;
  std::vector<std::size_t> segment_lengths;
  std::size_t run = 0;
  for (char c : text) {
    if (c == '-') {
      segment_lengths.push_back(run);
      run = 0;
      continue;
    }
    if (!irma_symbol(c)) {
      throw FormatError("invalid character '" + std::string(1, c) + "' in IRMA code '" +
                        std::string(text) + "'");
    }
    compact.push_back(c);
    ++run;
  }
  segment_lengths.push_back(run);

  const auto& lengths = IrmaCode::kAxisLengths;
  if (segment_lengths.size() == 1) {
    if (compact.size() != IrmaCode::kLength) {
      throw FormatError("IRMA code '" + std::string(text) + "' must have 13 characters");
    }
  } else if (segment_lengths.size() != lengths.size() ||
             !std::equal(lengths.begin(), lengths.end(), segment_lengths.begin())) {
    throw FormatError("IRMA code '" + std::string(text) +
                      "' must have segments of length 4-3-3-3");
  }

  IrmaCode code;
  std::size_t offset = 0;
  for (std::size_t a = 0; a < lengths.size(); ++a) {
    code.axes[a] = compact.substr(offset, lengths[a]);
    offset += lengths[a];
  }
  return code;
}

std::string format_irma_code(const IrmaCode& code) {
  return code.axes[0] + "-" + code.axes[1] + "-" + code.axes[2] + "-" + code.axes[3];
}

// --- manifest --------------------------------------------------------------

std::string_view to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& entry) const {
  std::filesystem::path p(entry.path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<int> DatasetManifest::class_counts(Split split) const {
  std::vector<int> counts(class_labels.size(), 0);
  for (const auto& e : entries) {
    if (e.split == split) ++counts[static_cast<std::size_t>(e.class_index)];
  }
  return counts;
}

std::vector<std::size_t> DatasetManifest::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].split == split) out.push_back(i);
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::optional<long long> as_integer(const std::string& s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string> ordered_labels(const std::set<std::string>& labels) {
  std::vector<std::string> out(labels.begin(), labels.end());
  const bool numeric = std::all_of(out.begin(), out.end(),
                                   [](const std::string& s) { return as_integer(s).has_value(); });
  if (numeric) {
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      return *as_integer(a) < *as_integer(b);
    });
  }
  return out;
}

}  // namespace

DatasetManifest parse_manifest(std::string_view text, const std::string& source) {
  struct RawLine {
    ManifestEntry entry;
    std::string label;
  };
  std::vector<RawLine> raw;
  std::set<std::string> labels;
  std::set<std::string> seen_paths;

  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const std::string where = source + ":" + std::to_string(line_no);

    std::vector<std::string> fields;
    std::stringstream ss(body);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (body.back() == ',') fields.emplace_back();
    if (fields.size() < 3 || fields.size() > 4) {
      throw FormatError(where + ": expected path,split,class[,irma_code]");
    }

    RawLine r;
    r.entry.path = fields[0];
    if (r.entry.path.empty()) throw FormatError(where + ": empty path");
    if (!seen_paths.insert(r.entry.path).second) {
      throw FormatError(where + ": duplicate path '" + r.entry.path + "'");
    }
    if (fields[1] == "train") {
      r.entry.split = Split::kTrain;
    } else if (fields[1] == "test") {
      r.entry.split = Split::kTest;
    } else {
      throw FormatError(where + ": unknown split '" + fields[1] + "'");
    }
    r.label = fields[2];
    if (r.label.empty()) throw FormatError(where + ": empty class label");
    if (fields.size() == 4 && !fields[3].empty()) {
      try {
        r.entry.code = parse_irma_code(fields[3]);
      } catch (const FormatError& e) {
        throw FormatError(where + ": " + e.what());
      }
    }
    labels.insert(r.label);
    raw.push_back(std::move(r));
  }

  DatasetManifest m;
  m.class_labels = ordered_labels(labels);
  std::map<std::string, int> index_of;
  for (std::size_t i = 0; i < m.class_labels.size(); ++i) {
    index_of[m.class_labels[i]] = static_cast<int>(i);
  }
  m.entries.reserve(raw.size());
  for (auto& r : raw) {
    r.entry.class_index = index_of.at(r.label);
    m.entries.push_back(std::move(r.entry));
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  DatasetManifest m =
      parse_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                     path.string());
  m.base_dir = path.parent_path();
  return m;
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::string out = "# path,split,class,irma_code\n";
  for (const auto& e : manifest.entries) {
    out += e.path;
    out += ',';
    out += to_string(e.split);
    out += ',';
    out += manifest.class_labels.at(static_cast<std::size_t>(e.class_index));
    if (e.code) {
      out += ',';
      out += format_irma_code(*e.code);
    }
    out += '\n';
  }
  return out;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << format_manifest(manifest);
}

// --- synthetic corpus ------------------------------------------------------

namespace {

constexpr int kBackgroundLevel = 100;
constexpr int kBackgroundJitter = 10;  // per-image offset of the background level
constexpr int kBackgroundNoise = 2;
constexpr int kCheckerAmplitude = 60;
constexpr int kTextureNoise = 20;

std::uint8_t clamp_pixel(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

void validate(const SyntheticCorpusSpec& spec) {
  if (spec.grid_k < 1) throw InvalidArgument("grid_k must be positive");
  if (spec.num_classes < 1) throw InvalidArgument("num_classes must be positive");
  if (spec.num_classes > spec.grid_k * spec.grid_k) {
    throw InvalidArgument("classes exceed grid: " + std::to_string(spec.num_classes) + " > " +
                          std::to_string(spec.grid_k * spec.grid_k) + " block positions");
  }
  if (spec.per_class < 1) throw InvalidArgument("per_class must be positive");
  if (spec.image_size % spec.grid_k != 0) {
    throw InvalidArgument("image_size must be divisible by grid_k");
  }
  if (spec.image_size / spec.grid_k < 3) {
    throw InvalidArgument("synthetic blocks must be at least 3x3");
  }
  if (spec.test_fraction < 0.0 || spec.test_fraction >= 1.0) {
    throw InvalidArgument("test_fraction must be in [0, 1)");
  }
}

IrmaCode random_code(Rng& rng) {
  static constexpr std::string_view kAlphabet = "0123456789abcdefghijklmnopqrstuvwxyz";
  IrmaCode code;
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t i = 0; i < IrmaCode::kAxisLengths[a]; ++i) {
      code.axes[a].push_back(kAlphabet[rng.below(kAlphabet.size())]);
    }
  }
  return code;
}

}  // namespace

std::vector<int> synthetic_roi_blocks(int class_index, int num_classes, int grid_k) {
  // Spread classes evenly over the k*k positions.
  const int positions = grid_k * grid_k;
  return {static_cast<int>(static_cast<long long>(class_index) * positions / num_classes)};
}

GrayImage render_synthetic_image(const SyntheticCorpusSpec& spec, int class_index,
                                 std::size_t image_index) {
  validate(spec);
  Rng rng(mix_seed(spec.seed, image_index));
  const int size = spec.image_size;
  const int block = size / spec.grid_k;
  const int level = kBackgroundLevel + static_cast<int>(rng.between(-kBackgroundJitter,
                                                                    kBackgroundJitter));
  GrayImage image(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      image.at(x, y) = clamp_pixel(level + static_cast<int>(rng.between(-kBackgroundNoise,
                                                                        kBackgroundNoise)));
    }
  }

  const int phase = static_cast<int>(rng.below(2));
  for (int pos : synthetic_roi_blocks(class_index, spec.num_classes, spec.grid_k)) {
    const int x0 = (pos % spec.grid_k) * block;
    const int y0 = (pos / spec.grid_k) * block;
    for (int y = y0; y < y0 + block; ++y) {
      for (int x = x0; x < x0 + block; ++x) {
        const int sign = ((x + y + phase) & 1) ? 1 : -1;
        const int noise = static_cast<int>(rng.between(-kTextureNoise, kTextureNoise));
        image.at(x, y) = clamp_pixel(level + sign * kCheckerAmplitude + noise);
      }
    }
  }
  return image;
}

DatasetManifest generate_synthetic_corpus(const SyntheticCorpusSpec& spec,
                                          const std::filesystem::path& dir) {
  validate(spec);
  std::filesystem::create_directories(dir / "images");

  DatasetManifest m;
  m.base_dir = dir;
  const int width = spec.num_classes >= 100 ? 3 : 2;
  for (int c = 0; c < spec.num_classes; ++c) {
    std::string label = std::to_string(c + 1);
    label.insert(0, static_cast<std::size_t>(std::max(0, width - static_cast<int>(label.size()))),
                 '0');
    m.class_labels.push_back("class" + label);
  }

  // One distinct IRMA code per class, drawn from a dedicated stream.
  Rng code_rng(mix_seed(spec.seed, ~std::uint64_t{0}));
  std::vector<IrmaCode> codes;
  std::set<IrmaCode> used;
  while (codes.size() < static_cast<std::size_t>(spec.num_classes)) {
    IrmaCode code = random_code(code_rng);
    if (used.insert(code).second) codes.push_back(std::move(code));
  }

  const int test_count = static_cast<int>(spec.per_class * spec.test_fraction);
  const std::size_t total = static_cast<std::size_t>(spec.num_classes) * spec.per_class;
  m.entries.resize(total);

  parallel_for(static_cast<std::ptrdiff_t>(total), 0, [&](std::ptrdiff_t g) {
    const int c = static_cast<int>(g / spec.per_class);
    const int i = static_cast<int>(g % spec.per_class);
    const GrayImage image = render_synthetic_image(spec, c, static_cast<std::size_t>(g));
    char name[64];
    std::snprintf(name, sizeof name, "images/c%03d_%04d.pgm", c + 1, i + 1);
    write_pgm(image, dir / name);
    ManifestEntry& e = m.entries[static_cast<std::size_t>(g)];
    e.path = name;
    e.split = i < spec.per_class - test_count ? Split::kTrain : Split::kTest;
    e.class_index = c;
    e.code = codes[static_cast<std::size_t>(c)];
  });

  write_manifest(m, dir / "manifest.csv");
  return m;
}

}  // namespace aecbir
