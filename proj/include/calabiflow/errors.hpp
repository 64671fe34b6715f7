#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace calabi {

// A metric (real or Hermitian) failed the per-point Cholesky test.
class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(std::size_t point, double pivot, const std::string& what)
      : std::runtime_error(what), point_(point), pivot_(pivot) {}
  std::size_t point() const noexcept { return point_; }
  double pivot() const noexcept { return pivot_; }

 private:
  std::size_t point_;
  double pivot_;
};

// Loss of admissibility of a Kahler potential, carrying the offending point.
class AdmissibilityError : public NotPositiveDefinite {
 public:
  AdmissibilityError(std::size_t point, double pivot, double time, const std::string& what)
      : NotPositiveDefinite(point, pivot, what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, double time, std::size_t point, double value)
      : std::runtime_error(what), time_(time), point_(point), value_(value) {}
  double time() const noexcept { return time_; }
  std::size_t point() const noexcept { return point_; }
  double value() const noexcept { return value_; }

 private:
  double time_;
  std::size_t point_;
  double value_;
};

}  // namespace calabi
