#pragma once

#include "momsurv/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <string>
#include <vector>

// Globally adaptive 7-point Gauss / 15-point Kronrod quadrature over a domain that is first
// split at caller-supplied breakpoints (kinks of the integrand). Integrands may be
// vector-valued so that a family of related integrals shares every node evaluation.
namespace momsurv::quad {

struct Options {
  double abs_tol = 1e-9;
  double rel_tol = 0.0;
  std::size_t max_intervals = 4000;
};

struct Result {
  std::vector<double> value;
  double error = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780, 0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Interval {
  double lo;
  double hi;
  std::vector<double> value;
  double error;
  bool operator<(const Interval& other) const { return error < other.error; }
};

template <class F>
Interval gk15(F& f, double lo, double hi, std::size_t dim, std::vector<double>& buf_a, std::vector<double>& buf_b) {
  const double centre = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  std::vector<double> kron(dim, 0.0), gauss(dim, 0.0);
  f(centre, std::span<double>(buf_a));
  for (std::size_t k = 0; k < dim; ++k) {
    kron[k] = kronrod_weights[7] * buf_a[k];
    gauss[k] = gauss_weights[3] * buf_a[k];
  }
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kronrod_nodes[j];
    f(centre - dx, std::span<double>(buf_a));
    f(centre + dx, std::span<double>(buf_b));
    for (std::size_t k = 0; k < dim; ++k) {
      const double pair = buf_a[k] + buf_b[k];
      kron[k] += kronrod_weights[j] * pair;
      if (j % 2 == 1) gauss[k] += gauss_weights[j / 2] * pair;
    }
  }
  double err = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    kron[k] *= half;
    err = std::max(err, std::abs(kron[k] - half * gauss[k]));
  }
  return {lo, hi, std::move(kron), err};
}

}  // namespace detail

// f(x, out) writes `dim` integrand components at x into out.
template <class F>
Result integrate_vector(F&& f, std::size_t dim, double lo, double hi, std::span<const double> breakpoints = {},
                        const Options& options = {}) {
  Result result;
  result.value.assign(dim, 0.0);
  if (!(hi > lo)) return result;

  std::vector<double> cuts{lo};
  for (double b : breakpoints) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<double> buf_a(dim), buf_b(dim);
  std::priority_queue<detail::Interval> heap;
  double total_error = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto piece = detail::gk15(f, cuts[i], cuts[i + 1], dim, buf_a, buf_b);
    result.evaluations += 15;
    for (std::size_t k = 0; k < dim; ++k) result.value[k] += piece.value[k];
    total_error += piece.error;
    heap.push(std::move(piece));
  }

  auto tolerance = [&] {
    double scale = 0.0;
    for (double v : result.value) scale = std::max(scale, std::abs(v));
    return std::max(options.abs_tol, options.rel_tol * scale);
  };

  while (total_error > tolerance()) {
    if (heap.size() >= options.max_intervals) {
      throw NumericalError("adaptive quadrature did not converge on [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "], error estimate " + std::to_string(total_error));
    }
    detail::Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) {
      throw NumericalError("adaptive quadrature exhausted floating-point resolution");
    }
    auto left = detail::gk15(f, worst.lo, mid, dim, buf_a, buf_b);
    auto right = detail::gk15(f, mid, worst.hi, dim, buf_a, buf_b);
    result.evaluations += 30;
    for (std::size_t k = 0; k < dim; ++k) result.value[k] += left.value[k] + right.value[k] - worst.value[k];
    total_error += left.error + right.error - worst.error;
    heap.push(std::move(left));
    heap.push(std::move(right));
  }
  // Recompute from the leaves to shed accumulated cancellation in the running totals.
  std::fill(result.value.begin(), result.value.end(), 0.0);
  total_error = 0.0;
  while (!heap.empty()) {
    const auto& leaf = heap.top();
    for (std::size_t k = 0; k < dim; ++k) result.value[k] += leaf.value[k];
    total_error += leaf.error;
    heap.pop();
  }
  result.error = total_error;
  return result;
}

template <class F>
double integrate(F&& f, double lo, double hi, std::span<const double> breakpoints = {},
                 const Options& options = {}) {
  auto wrapped = [&f](double x, std::span<double> out) { out[0] = f(x); };
  return integrate_vector(wrapped, 1, lo, hi, breakpoints, options).value[0];
}

}  // namespace momsurv::quad
