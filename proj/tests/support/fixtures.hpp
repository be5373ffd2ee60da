#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <system_error>
#include <vector>

#include "aecbir/dataset.hpp"
#include "oracles.hpp"

namespace fixtures {

// Self-deleting scratch directory.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("aecbir_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline aecbir::GrayImage random_image(std::mt19937_64& gen, int w, int h, int lo = 0,
                                      int hi = 255) {
  std::uniform_int_distribution<int> px(lo, hi);
  std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h);
  for (auto& v : data) v = static_cast<std::uint8_t>(px(gen));
  return aecbir::GrayImage(w, h, std::move(data));
}

inline oracle::Raster to_raster(const aecbir::GrayImage& img) {
  oracle::Raster r;
  r.width = img.width();
  r.height = img.height();
  r.px.assign(img.pixels().begin(), img.pixels().end());
  return r;
}

struct SvmFixture {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  double C = 1.0;
  double gamma = 0.5;
};

// Two overlapping 2-D clusters, 6..12 points, both labels present.
inline SvmFixture svm_fixture(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> count(6, 12);
  std::normal_distribution<double> noise(0.0, 0.9);
  std::uniform_real_distribution<double> cpick(0.0, 1.0);
  SvmFixture f;
  const int n = count(gen);
  f.C = cpick(gen) < 0.5 ? 1.0 : 10.0;
  f.gamma = 0.25 + cpick(gen);
  for (int i = 0; i < n; ++i) {
    const int label = i % 2 == 0 ? 1 : -1;
    f.X.push_back({label * 1.0 + noise(gen), label * 0.5 + noise(gen)});
    f.y.push_back(label);
  }
  return f;
}

}  // namespace fixtures
