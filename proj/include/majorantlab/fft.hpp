#pragma once

#include <complex>
#include <cstddef>
#include <memory>

namespace majorantlab {

// In-place complex FFT of a fixed power-of-two size backed by FFTW.
//   backward: x_j <- sum_n x_n e(+n j / K)   (evaluates a trig polynomial)
//   forward:  x_n <- sum_j x_j e(-n j / K)
// Plans use FFTW_ESTIMATE so results do not depend on timing. Plan creation is
// serialized internally; execution on distinct objects is thread safe.
class Fft {
 public:
  enum class Direction { forward, backward };

  Fft(std::size_t size, Direction dir);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  Fft(Fft&&) noexcept;
  Fft& operator=(Fft&&) noexcept;

  std::size_t size() const { return size_; }
  std::complex<double>* data();
  const std::complex<double>* data() const;
  void execute();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t size_ = 0;
};

// Smallest power of two >= n (n >= 1).
std::size_t next_pow2(std::size_t n);

}  // namespace majorantlab
