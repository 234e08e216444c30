#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mmcyto {

/// Single-channel 2D image of 32-bit floats, row-major, with physical pixel
/// spacing. Pixel (x, y) has its center at integer coordinates; x is the
/// column index.
class Plane {
 public:
  Plane() = default;
  Plane(int height, int width, float fill = 0.0F, double pixel_size_um = 1.0);
  Plane(int height, int width, std::vector<float> pixels, double pixel_size_um = 1.0);

  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] std::size_t size() const noexcept { return pixels_.size(); }
  [[nodiscard]] bool empty() const noexcept { return pixels_.empty(); }
  [[nodiscard]] double pixel_size_um() const noexcept { return pixel_size_um_; }
  void set_pixel_size_um(double um);

  [[nodiscard]] float& at(int y, int x) noexcept { return pixels_[index(y, x)]; }
  [[nodiscard]] float at(int y, int x) const noexcept { return pixels_[index(y, x)]; }

  [[nodiscard]] std::span<float> pixels() noexcept { return pixels_; }
  [[nodiscard]] std::span<const float> pixels() const noexcept { return pixels_; }
  [[nodiscard]] std::span<float> row(int y) noexcept {
    return {pixels_.data() + index(y, 0), static_cast<std::size_t>(width_)};
  }
  [[nodiscard]] std::span<const float> row(int y) const noexcept {
    return {pixels_.data() + index(y, 0), static_cast<std::size_t>(width_)};
  }

  [[nodiscard]] bool same_geometry(const Plane& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  /// Copy of the window [y0, y0+h) x [x0, x0+w); the window must lie inside.
  [[nodiscard]] Plane crop(int y0, int x0, int h, int w) const;

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  [[nodiscard]] std::size_t index(int y, int x) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> pixels_;
  double pixel_size_um_ = 1.0;
};

enum class Modality { BF, FL };

std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);

/// Channels expected for a modality: 3 (RGB) for BF, 4 for FL.
constexpr int channel_count(Modality m) noexcept { return m == Modality::BF ? 3 : 4; }

struct MultiChannelImage {
  Modality modality = Modality::BF;
  std::vector<Plane> channels;
  std::vector<std::string> channel_names;

  [[nodiscard]] int height() const noexcept { return channels.empty() ? 0 : channels.front().height(); }
  [[nodiscard]] int width() const noexcept { return channels.empty() ? 0 : channels.front().width(); }
  [[nodiscard]] double pixel_size_um() const noexcept {
    return channels.empty() ? 1.0 : channels.front().pixel_size_um();
  }

  /// Throws InvalidArgument when channel count or geometry is inconsistent.
  void validate() const;

  friend bool operator==(const MultiChannelImage&, const MultiChannelImage&) = default;
};

std::vector<std::string> default_channel_names(Modality m);

struct ZStack {
  std::vector<MultiChannelImage> levels;
  std::vector<double> z_offsets_um;

  [[nodiscard]] std::size_t size() const noexcept { return levels.size(); }
  [[nodiscard]] bool empty() const noexcept { return levels.empty(); }
  [[nodiscard]] std::size_t middle_index() const noexcept {
    return levels.empty() ? 0 : (levels.size() - 1) / 2;
  }
  [[nodiscard]] Modality modality() const noexcept {
    return levels.empty() ? Modality::BF : levels.front().modality;
  }

  void validate() const;
};

/// Separable Gaussian convolution with symmetric (half-sample) reflection at
/// the borders. The kernel is truncated at 4 sigma and normalized to sum 1.
Plane gaussian_filter(const Plane& p, double sigma);

/// Discrete normalized 1D kernel used by gaussian_filter (length 2r+1).
std::vector<double> gaussian_kernel(double sigma);

/// Linear-interpolated order statistic over all pixels, q in [0, 1].
double percentile(const Plane& p, double q);
double percentile(std::span<const float> values, double q);

/// Averages factor x factor blocks; trailing rows/cols that do not fill a
/// block are dropped. Pixel spacing is scaled by the factor.
Plane downsample_box(const Plane& p, int factor);

struct PlaneStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};
PlaneStats plane_stats(const Plane& p);

}  // namespace mmcyto
