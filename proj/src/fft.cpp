#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace adisc::detail {
namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
      fftw_destroy_plan(p.r2c);
      fftw_destroy_plan(p.c2r);
    }
  }

  const PlanPair& get(int n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    // The planner is not thread-safe; plans built with FFTW_UNALIGNED may be
    // executed concurrently on any buffers through the new-array interface.
    fftw_complex* in = fftw_alloc_complex(n);
    fftw_complex* out = fftw_alloc_complex(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair p;
    p.forward = fftw_plan_dft_1d(n, in, out, FFTW_FORWARD, flags);
    p.backward = fftw_plan_dft_1d(n, in, out, FFTW_BACKWARD, flags);
    double* real = fftw_alloc_real(n);
    p.r2c = fftw_plan_dft_r2c_1d(n, real, out, flags);
    p.c2r = fftw_plan_dft_c2r_1d(n, in, real, flags);
    fftw_free(real);
    fftw_free(in);
    fftw_free(out);
    return plans_.emplace(n, p).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<int, PlanPair> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

fftw_complex* as_fftw(const std::complex<double>* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(p));
}

}  // namespace

void fft_forward(const std::complex<double>* in, std::complex<double>* out, int n) {
  fftw_execute_dft(cache().get(n).forward, as_fftw(in), reinterpret_cast<fftw_complex*>(out));
}

void fft_backward(const std::complex<double>* in, std::complex<double>* out, int n) {
  fftw_execute_dft(cache().get(n).backward, as_fftw(in), reinterpret_cast<fftw_complex*>(out));
}

void fft_r2c(const double* in, std::complex<double>* out, int n) {
  fftw_execute_dft_r2c(cache().get(n).r2c, const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void fft_c2r(std::complex<double>* in, double* out, int n) {
  fftw_execute_dft_c2r(cache().get(n).c2r, reinterpret_cast<fftw_complex*>(in), out);
}

}  // namespace adisc::detail
