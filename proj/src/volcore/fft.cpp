#include "crackforge/volcore/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <numbers>

#include "crackforge/volcore/grid.hpp"

namespace crackforge::fft {

namespace {

// FFTW's planner is not re-entrant; execution of existing plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void FftwDeleter::operator()(void* p) const { fftw_free(p); }

template <typename T>
Buffer<T>::Buffer(std::size_t n)
    : ptr_(static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)))), n_(n) {
  if (!ptr_) throw std::bad_alloc();
  std::fill_n(ptr_.get(), n_, T{});
}

template class Buffer<double>;
template class Buffer<std::complex<double>>;

std::shared_ptr<const RealPlan> RealPlan::get(const std::vector<int>& shape) {
  static std::mutex cache_mutex;
  static std::map<std::vector<int>, std::shared_ptr<const RealPlan>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(shape);
  if (it != cache.end()) return it->second;
  std::shared_ptr<const RealPlan> p(new RealPlan(shape));
  cache.emplace(shape, p);
  return p;
}

RealPlan::RealPlan(std::vector<int> shape) : shape_(std::move(shape)) {
  if (shape_.empty()) throw Error("fft: empty shape");
  real_size_ = 1;
  for (int n : shape_) {
    if (n <= 0) throw Error("fft: non-positive extent");
    real_size_ *= static_cast<std::size_t>(n);
  }
  complex_size_ = real_size_ / static_cast<std::size_t>(shape_.back()) *
                  static_cast<std::size_t>(shape_.back() / 2 + 1);
  RealBuffer r(real_size_);
  ComplexBuffer c(complex_size_);
  std::lock_guard<std::mutex> lock(planner_mutex());
  const int rank = static_cast<int>(shape_.size());
  auto* cp = reinterpret_cast<fftw_complex*>(c.data());
  forward_ = fftw_plan_dft_r2c(rank, shape_.data(), r.data(), cp, FFTW_ESTIMATE);
  inverse_ = fftw_plan_dft_c2r(rank, shape_.data(), cp, r.data(), FFTW_ESTIMATE);
  if (!forward_ || !inverse_) throw Error("fft: plan creation failed");
}

RealPlan::~RealPlan() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_));
}

void RealPlan::forward(const RealBuffer& in, ComplexBuffer& out) const {
  // r2c does not modify its input
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_), const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealPlan::inverse(ComplexBuffer& in, RealBuffer& out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_),
                       reinterpret_cast<fftw_complex*>(in.data()), out.data());
}

void complex_2d(std::vector<std::complex<double>>& data, int n0, int n1, int sign) {
  if (data.size() != static_cast<std::size_t>(n0) * static_cast<std::size_t>(n1)) {
    throw Error("fft: complex_2d size mismatch");
  }
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_2d(n0, n1, p, p, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan);
}

double angular_frequency(std::size_t k, std::size_t n) {
  const auto sk = static_cast<double>(k);
  const auto sn = static_cast<double>(n);
  return 2.0 * std::numbers::pi * (k <= n / 2 ? sk : sk - sn) / sn;
}

}  // namespace crackforge::fft
