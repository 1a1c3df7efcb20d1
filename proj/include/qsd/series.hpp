#ifndef QSD_SERIES_HPP
#define QSD_SERIES_HPP

#include <span>
#include <string>
#include <vector>

#include "qsd/errors.hpp"
#include "qsd/scalar.hpp"

namespace qsd {

// Truncated power series in the perturbation parameter eps.  coeff(n)
// multiplies eps^n; the series represents value + o(eps^order).  The
// truncation order is explicit and every operation is exact at that order:
// no coefficient beyond it is ever read or written.
template <class S>
class PowerSeries {
 public:
  explicit PowerSeries(int order) : coeffs_(check_order(order) + 1, scalar_traits<S>::zero()) {}
  explicit PowerSeries(std::vector<S> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw UsageError("power series needs at least a constant term");
  }

  static PowerSeries constant(const S& value, int order) {
    PowerSeries s(order);
    s.coeffs_[0] = value;
    return s;
  }

  int order() const { return static_cast<int>(coeffs_.size()) - 1; }
  const S& coeff(int n) const { return coeffs_.at(static_cast<size_t>(n)); }
  S& coeff(int n) { return coeffs_.at(static_cast<size_t>(n)); }
  const std::vector<S>& coeffs() const { return coeffs_; }

  bool is_zero() const {
    for (const S& c : coeffs_)
      if (!scalar_traits<S>::is_zero(c)) return false;
    return true;
  }

  // Horner evaluation at a point.
  S operator()(const S& x) const {
    S acc = coeffs_.back();
    for (int n = order() - 1; n >= 0; --n) acc = acc * x + coeffs_[static_cast<size_t>(n)];
    return acc;
  }

 private:
  static int check_order(int order) {
    if (order < 0) throw UsageError("negative series order");
    return order;
  }
  std::vector<S> coeffs_;
};

namespace detail {
template <class S>
void require_same_order(const PowerSeries<S>& a, const PowerSeries<S>& b, const char* op) {
  if (a.order() != b.order())
    throw UsageError(std::string(op) + ": order mismatch (" + std::to_string(a.order()) + " vs " +
                     std::to_string(b.order()) + ")");
}
}  // namespace detail

// Truncate or zero-pad to a new order.
template <class S>
PowerSeries<S> with_order(const PowerSeries<S>& s, int order) {
  PowerSeries<S> out(order);
  const int top = std::min(order, s.order());
  for (int n = 0; n <= top; ++n) out.coeff(n) = s.coeff(n);
  return out;
}

template <class S>
PowerSeries<S> operator+(const PowerSeries<S>& a, const PowerSeries<S>& b) {
  detail::require_same_order(a, b, "series add");
  PowerSeries<S> out(a.order());
  for (int n = 0; n <= a.order(); ++n) {
    out.coeff(n) = a.coeff(n) + b.coeff(n);
    scalar_traits<S>::check(out.coeff(n));
  }
  return out;
}

template <class S>
PowerSeries<S> operator-(const PowerSeries<S>& a) {
  PowerSeries<S> out(a.order());
  for (int n = 0; n <= a.order(); ++n) out.coeff(n) = -a.coeff(n);
  return out;
}

template <class S>
PowerSeries<S> operator-(const PowerSeries<S>& a, const PowerSeries<S>& b) {
  return a + (-b);
}

// Truncated Cauchy product: c[n] = sum_{m<=n} a[m] b[n-m].
template <class S>
PowerSeries<S> operator*(const PowerSeries<S>& a, const PowerSeries<S>& b) {
  detail::require_same_order(a, b, "series mul");
  PowerSeries<S> out(a.order());
  for (int n = 0; n <= a.order(); ++n) {
    S acc = scalar_traits<S>::zero();
    for (int m = 0; m <= n; ++m) acc += a.coeff(m) * b.coeff(n - m);
    scalar_traits<S>::check(acc);
    out.coeff(n) = acc;
  }
  return out;
}

template <class S>
PowerSeries<S> operator*(const S& k, const PowerSeries<S>& a) {
  PowerSeries<S> out(a.order());
  for (int n = 0; n <= a.order(); ++n) {
    out.coeff(n) = k * a.coeff(n);
    scalar_traits<S>::check(out.coeff(n));
  }
  return out;
}

template <class S>
bool operator==(const PowerSeries<S>& a, const PowerSeries<S>& b) {
  if (a.order() != b.order()) return false;
  for (int n = 0; n <= a.order(); ++n)
    if (!(a.coeff(n) == b.coeff(n))) return false;
  return true;
}

// Long division: q with den * q == num up to the truncation order.
// Requires a nonzero constant term in the denominator.
template <class S>
PowerSeries<S> divide(const PowerSeries<S>& num, const PowerSeries<S>& den) {
  detail::require_same_order(num, den, "series divide");
  if (scalar_traits<S>::is_zero(den.coeff(0)))
    throw SingularDivisionError("series division by a series with zero constant term");
  PowerSeries<S> q(num.order());
  for (int n = 0; n <= num.order(); ++n) {
    S acc = num.coeff(n);
    for (int m = 1; m <= n; ++m) acc -= den.coeff(m) * q.coeff(n - m);
    q.coeff(n) = acc / den.coeff(0);
    scalar_traits<S>::check(q.coeff(n));
  }
  return q;
}

// One solution (n_1, ..., n_{q-1}) of n_1 + ... + n_{q-1} = m and
// n_1 + 2 n_2 + ... + (q-1) n_{q-1} = q.
struct PartitionSolution {
  std::vector<int> counts;  // counts[p-1] = n_p

  friend bool operator==(const PartitionSolution& a, const PartitionSolution& b) {
    return a.counts == b.counts;
  }
};

// All non-negative integer solutions for given (m, q), in lexicographic
// order of (n_1, ..., n_{q-1}).  The set may be empty.
inline std::vector<PartitionSolution> enumerate_partitions(int m, int q) {
  if (m < 2 || q < m) throw UsageError("enumerate_partitions requires 2 <= m <= q");
  std::vector<PartitionSolution> out;
  std::vector<int> cur(static_cast<size_t>(q - 1), 0);
  // Depth-first over n_1, n_2, ...; ascending values keep the output ordered.
  const auto rec = [&](auto&& self, int p, int sum_left, int weight_left) -> void {
    if (p == q) {
      if (sum_left == 0 && weight_left == 0) out.push_back({cur});
      return;
    }
    const int max_np = std::min(sum_left, weight_left / p);
    for (int np = 0; np <= max_np; ++np) {
      cur[static_cast<size_t>(p - 1)] = np;
      self(self, p + 1, sum_left - np, weight_left - p * np);
    }
    cur[static_cast<size_t>(p - 1)] = 0;
  };
  rec(rec, 1, m, q);
  return out;
}

// sum_{r=0}^{R} inner(eps)^r / r! * outer_r(eps), truncated at `order`.
// inner must have zero constant term, so inner^r only feeds coefficients
// at eps^r and beyond; outer_r therefore only needs order >= order - r.
template <class S>
PowerSeries<S> taylor_substitute(std::span<const PowerSeries<S>> outer, const PowerSeries<S>& inner,
                                 int order) {
  if (order < 0) throw UsageError("negative substitution order");
  if (static_cast<int>(outer.size()) < order + 1)
    throw UsageError("taylor_substitute needs outer terms up to r = order");
  if (!scalar_traits<S>::is_zero(inner.coeff(0)))
    throw UsageError("taylor_substitute requires inner series with zero constant term");
  for (int r = 0; r <= order; ++r)
    if (outer[static_cast<size_t>(r)].order() < order - r)
      throw UsageError("taylor_substitute: outer term " + std::to_string(r) +
                       " truncated below order " + std::to_string(order - r));

  const PowerSeries<S> x = with_order(inner, order);
  PowerSeries<S> result(order);
  PowerSeries<S> x_pow = PowerSeries<S>::constant(scalar_traits<S>::one(), order);
  for (int r = 0; r <= order; ++r) {
    const S inv_fact =
        scalar_traits<S>::one() / scalar_traits<S>::from_long(factorial(r));
    result = result + inv_fact * (x_pow * with_order(outer[static_cast<size_t>(r)], order));
    if (r < order) x_pow = x_pow * x;
  }
  return result;
}

template <class S>
PowerSeries<S> taylor_substitute(const std::vector<PowerSeries<S>>& outer,
                                 const PowerSeries<S>& inner, int order) {
  return taylor_substitute(std::span<const PowerSeries<S>>(outer.data(), outer.size()), inner,
                           order);
}

template <class S>
std::string to_string(const PowerSeries<S>& s) {
  std::string out;
  for (int n = 0; n <= s.order(); ++n) {
    if (n > 0) out += " + ";
    out += scalar_traits<S>::str(s.coeff(n));
    if (n == 1) out += " e";
    if (n > 1) out += " e^" + std::to_string(n);
  }
  return out;
}

}  // namespace qsd

#endif  // QSD_SERIES_HPP
