#pragma once

#include <exception>

namespace disa::detail {

// Exceptions must not leave an OpenMP region. Loop bodies run through
// capture(); the first exception is rethrown once the region has joined.
class FirstException {
 public:
  template <class Body>
  void capture(Body&& body) noexcept {
    try {
      body();
    } catch (...) {
#pragma omp critical(disa_first_exception)
      if (!error_) error_ = std::current_exception();
    }
  }

  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

}  // namespace disa::detail
