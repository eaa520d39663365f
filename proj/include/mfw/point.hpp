#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>

namespace mfw {

/// A location in R^d for d <= 3. Value type, no heap storage.
class Point {
 public:
  static constexpr std::size_t kMaxDim = 3;

  Point() = default;
  explicit Point(double x) : coords_{x, 0.0, 0.0}, dim_(1) {}
  Point(std::initializer_list<double> xs);
  explicit Point(std::span<const double> xs);

  std::size_t dim() const noexcept { return dim_; }
  double operator[](std::size_t i) const noexcept { return coords_[i]; }
  double& operator[](std::size_t i) noexcept { return coords_[i]; }
  std::span<const double> coords() const noexcept { return {coords_.data(), dim_}; }

  friend bool operator==(const Point& a, const Point& b) noexcept {
    if (a.dim_ != b.dim_) return false;
    for (std::size_t i = 0; i < a.dim_; ++i)
      if (a.coords_[i] != b.coords_[i]) return false;
    return true;
  }

 private:
  std::array<double, kMaxDim> coords_{};
  std::size_t dim_ = 0;
};

inline double distance(const Point& a, const Point& b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Strict lexicographic order on coordinates; used for deterministic ties.
inline bool lex_less(const Point& a, const Point& b) noexcept {
  for (std::size_t i = 0; i < a.dim(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

std::string to_string(const Point& p);

}  // namespace mfw
