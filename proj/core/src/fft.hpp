#pragma once

#include <complex>
#include <cstddef>
#include <memory>

namespace mmcyto::detail {

struct FftwDeleter {
  void operator()(void* p) const noexcept;
};

template <typename T>
using FftwArray = std::unique_ptr<T[], FftwDeleter>;

FftwArray<double> alloc_real(std::size_t n);
FftwArray<std::complex<double>> alloc_complex(std::size_t n);

/// Smallest n' >= n whose prime factors are all in {2, 3, 5, 7}.
int good_fft_size(int n);

/// Real 2D transform pair of a fixed size. Plans are created under a global
/// lock; execution uses the new-array interface and is thread-safe as long as
/// each thread passes its own buffers (allocated via alloc_real/alloc_complex).
class RealFft2D {
 public:
  RealFft2D(int rows, int cols);
  ~RealFft2D();
  RealFft2D(const RealFft2D&) = delete;
  RealFft2D& operator=(const RealFft2D&) = delete;

  [[nodiscard]] int rows() const noexcept { return rows_; }
  [[nodiscard]] int cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t real_size() const noexcept {
    return static_cast<std::size_t>(rows_) * cols_;
  }
  [[nodiscard]] std::size_t spectrum_size() const noexcept {
    return static_cast<std::size_t>(rows_) * (cols_ / 2 + 1);
  }

  void forward(double* in, std::complex<double>* out) const;
  /// Unnormalized inverse; destroys `in`.
  void inverse(std::complex<double>* in, double* out) const;

 private:
  int rows_;
  int cols_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

}  // namespace mmcyto::detail
