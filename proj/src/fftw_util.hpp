#pragma once

#include <fftw3.h>

#include <cstddef>
#include <memory>
#include <mutex>

namespace potwell::detail {

// The FFTW planner is not thread-safe; execution of an existing plan on
// new arrays is.
inline std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline RealBuffer alloc_real(std::size_t n) { return RealBuffer(fftw_alloc_real(n)); }
inline ComplexBuffer alloc_complex(std::size_t n) { return ComplexBuffer(fftw_alloc_complex(n)); }

class Plan {
 public:
  Plan() = default;
  explicit Plan(fftw_plan p) : plan_(p) {}
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  Plan(Plan&& o) noexcept : plan_(o.plan_) { o.plan_ = nullptr; }
  Plan& operator=(Plan&& o) noexcept {
    if (this != &o) {
      reset();
      plan_ = o.plan_;
      o.plan_ = nullptr;
    }
    return *this;
  }
  ~Plan() { reset(); }

  fftw_plan get() const { return plan_; }

 private:
  void reset() {
    if (plan_) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
      plan_ = nullptr;
    }
  }
  fftw_plan plan_ = nullptr;
};

}  // namespace potwell::detail
