#include "fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <new>

#include "mmcyto/error.hpp"

namespace mmcyto::detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void FftwDeleter::operator()(void* p) const noexcept { fftw_free(p); }

FftwArray<double> alloc_real(std::size_t n) {
  auto* p = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  if (p == nullptr) throw std::bad_alloc();
  return FftwArray<double>(p);
}

FftwArray<std::complex<double>> alloc_complex(std::size_t n) {
  auto* p = static_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (p == nullptr) throw std::bad_alloc();
  return FftwArray<std::complex<double>>(p);
}

int good_fft_size(int n) {
  if (n <= 1) return 1;
  // Even sizes only: odd-length transforms run far slower in FFTW.
  for (int m = n + (n % 2);; m += 2) {
    int r = m;
    for (int f : {2, 3, 5, 7}) {
      while (r % f == 0) r /= f;
    }
    if (r == 1) return m;
  }
}

RealFft2D::RealFft2D(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows <= 0 || cols <= 0) throw Error(ErrorCode::InvalidArgument, "FFT size must be positive");
  auto real = alloc_real(real_size());
  auto spec = alloc_complex(spectrum_size());
  std::lock_guard lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_r2c_2d(rows, cols, real.get(),
                                       reinterpret_cast<fftw_complex*>(spec.get()), FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_2d(rows, cols, reinterpret_cast<fftw_complex*>(spec.get()),
                                       real.get(), FFTW_ESTIMATE);
  if (forward_plan_ == nullptr || inverse_plan_ == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "FFTW planning failed");
  }
}

RealFft2D::~RealFft2D() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void RealFft2D::forward(double* in, std::complex<double>* out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), in,
                       reinterpret_cast<fftw_complex*>(out));
}

void RealFft2D::inverse(std::complex<double>* in, double* out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex*>(in), out);
}

}  // namespace mmcyto::detail
