#include "majorantlab/fft.hpp"

#include <mutex>
#include <new>

#include <fftw3.h>

namespace majorantlab {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Fft::Impl {
  fftw_complex* buf = nullptr;
  fftw_plan plan = nullptr;

  ~Impl() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plan != nullptr) fftw_destroy_plan(plan);
    fftw_free(buf);
  }
};

Fft::Fft(std::size_t size, Direction dir) : impl_(std::make_unique<Impl>()), size_(size) {
  impl_->buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size));
  if (impl_->buf == nullptr) throw std::bad_alloc();
  std::lock_guard<std::mutex> lock(planner_mutex());
  impl_->plan = fftw_plan_dft_1d(static_cast<int>(size), impl_->buf, impl_->buf,
                                 dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft::~Fft() = default;

Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

std::complex<double>* Fft::data() { return reinterpret_cast<std::complex<double>*>(impl_->buf); }
const std::complex<double>* Fft::data() const { return reinterpret_cast<const std::complex<double>*>(impl_->buf); }

void Fft::execute() { fftw_execute(impl_->plan); }

std::size_t next_pow2(std::size_t n) {
  std::size_t k = 1;
  while (k < n) k <<= 1;
  return k;
}

}  // namespace majorantlab
