#ifndef QSD_EXPAND_HPP
#define QSD_EXPAND_HPP

#include <string>
#include <vector>

#include "qsd/rootfind.hpp"

namespace qsd {

// Coefficient tables of the moment-functional expansions around eps = 0:
//
//   phi_ii(rho0, r)    = b[r,0] + b[r,1] eps + ...      (b_i[r,n])
//   omega_iij(rho0, r) = a_j[r,0] + a_j[r,1] eps + ...  (a_ij[r,n])
//
// with i the fixed reference state and rho0 the characteristic root of the
// limiting kernel.  Row r is truncated at order k+1-r.  The full solution
// vectors across start states are kept alongside (phi_vec, omega_vec).
template <class S>
struct MomentSeriesTable {
  int num_states = 0;
  int k = 0;
  int i_ref = 1;
  S rho0 = scalar_traits<S>::zero();
  std::vector<PowerSeries<S>> b;                          // b[r], r = 0..k+1
  std::vector<std::vector<PowerSeries<S>>> a;             // a[j][r], j = 1..N (0 unused)
  std::vector<std::vector<PowerSeries<S>>> phi_vec;       // phi_vec[r][i-1]
  std::vector<std::vector<std::vector<PowerSeries<S>>>> omega_vec;  // [j][r][i-1]
};

template <class S>
struct ExpansionDiagnostics {
  std::string backend;
  bool char_identity_ok = false;   // taylor_substitute(b, c) == 1 up to order k
  bool dual_route_ok = false;      // closed-form coefficients == composition route
  bool normalization_ok = false;   // sum_j pi_j = 1 + 0 eps + ... + 0 eps^k
  bool i_ref_invariance_checked = false;
  bool i_ref_invariant = false;
};

// The asymptotic expansion of the quasi-stationary distribution:
// pi_j(eps) = pi[j].coeff(0) + pi[j].coeff(1) eps + ... + o(eps^k).
template <class S>
struct QsdExpansion {
  int num_states = 0;
  int k = 0;
  int i_ref = 1;
  S rho0 = scalar_traits<S>::zero();
  std::vector<S> c;                 // root coefficients c_1..c_k
  std::vector<PowerSeries<S>> d;    // d[j], j = 1..N (index 0 unused), order k
  PowerSeries<S> e{0};              // e[n] = sum_j d_j[n]
  std::vector<PowerSeries<S>> pi;   // pi[j], order k
  ExpansionDiagnostics<S> diagnostics;

  PowerSeries<S> root_series() const {
    PowerSeries<S> s(k);
    s.coeff(0) = rho0;
    for (int n = 1; n <= k; ++n) s.coeff(n) = c[static_cast<size_t>(n - 1)];
    return s;
  }
};

// Series of p_ij(rho0, r) in eps: sum_n n^r e^{rho0 n} Q_ij(n; eps), a finite
// sum of the kernel polynomials.  Exact for the rational backend (rho0 = 0).
template <class S>
PowerSeries<S> expand_p_functional(const PerturbedSemiMarkovModel<S>& m, const S& rho0, int r,
                                   int i, int j, int order) {
  PowerSeries<S> acc(order);
  for (int n = 1; n <= m.max_time; ++n) {
    const S w = power_weight<S>(n, r) * scalar_traits<S>::exp_weight(rho0, n);
    acc = acc + w * with_order(m.poly(i, j, n), order);
  }
  return acc;
}

template <class S>
std::vector<std::vector<PowerSeries<S>>> expand_p_functionals(const PerturbedSemiMarkovModel<S>& m,
                                                              const S& rho0, int r, int order) {
  std::vector<std::vector<PowerSeries<S>>> out(
      static_cast<size_t>(m.num_states) + 1,
      std::vector<PowerSeries<S>>(static_cast<size_t>(m.num_states) + 1, PowerSeries<S>(order)));
  for (int i = 1; i <= m.num_states; ++i)
    for (int j = 0; j <= m.num_states; ++j)
      out[static_cast<size_t>(i)][static_cast<size_t>(j)] =
          expand_p_functional(m, rho0, r, i, j, order);
  return out;
}

namespace detail {

// Taboo linear systems with power-series scalars, solved order by order
// against one factorization of the limiting matrix:
//   x[n] = (I - A[0])^{-1} (rhs[n] + sum_{m=1}^{n} A[m] x[n-m]).
template <class S>
class SeriesTabooSystem {
 public:
  SeriesTabooSystem(const PerturbedSemiMarkovModel<S>& m, const S& rho0, int r_max, int taboo,
                    int order)
      : n_(m.num_states), taboo_(taboo), order_(order) {
    p_.reserve(static_cast<size_t>(r_max) + 1);
    for (int u = 0; u <= r_max; ++u) p_.push_back(expand_p_functionals(m, rho0, u, order));
    Matrix<S> a0(n_, n_);
    for (int i = 1; i <= n_; ++i)
      for (int s = 1; s <= n_; ++s)
        a0(i - 1, s - 1) = s == taboo_ ? scalar_traits<S>::zero()
                                       : p_series(0, i, s).coeff(0);
    if (!spectral_radius_below_one(a0))
      throw CriticalityError("limiting taboo matrix is critical (spectral radius >= 1); "
                             "moment-series expansions are undefined");
    Matrix<S> lim = Matrix<S>::identity(n_);
    for (int i = 0; i < n_; ++i)
      for (int s = 0; s < n_; ++s) lim(i, s) -= a0(i, s);
    factor_.emplace_back(std::move(lim));
  }

  const PowerSeries<S>& p_series(int u, int i, int s) const {
    return p_[static_cast<size_t>(u)][static_cast<size_t>(i)][static_cast<size_t>(s)];
  }

  // Solve (I - A(eps)) x(eps) = rhs(eps), A = p-series level 0 with the
  // taboo column removed.
  std::vector<PowerSeries<S>> solve(const std::vector<PowerSeries<S>>& rhs) const {
    std::vector<std::vector<S>> x_layers;  // x_layers[n] = coefficient vector
    for (int layer = 0; layer <= order_; ++layer) {
      std::vector<S> y(static_cast<size_t>(n_), scalar_traits<S>::zero());
      for (int i = 1; i <= n_; ++i) {
        S acc = rhs[static_cast<size_t>(i - 1)].coeff(layer);
        for (int mlayer = 1; mlayer <= layer; ++mlayer)
          for (int s = 1; s <= n_; ++s) {
            if (s == taboo_) continue;
            acc += p_series(0, i, s).coeff(mlayer) *
                   x_layers[static_cast<size_t>(layer - mlayer)][static_cast<size_t>(s - 1)];
          }
        y[static_cast<size_t>(i - 1)] = acc;
      }
      x_layers.push_back(factor_[0].solve(y));
    }
    std::vector<PowerSeries<S>> x(static_cast<size_t>(n_), PowerSeries<S>(order_));
    for (int i = 0; i < n_; ++i)
      for (int layer = 0; layer <= order_; ++layer)
        x[static_cast<size_t>(i)].coeff(layer) = x_layers[static_cast<size_t>(layer)]
                                                         [static_cast<size_t>(i)];
    return x;
  }

  // Triangular right-hand side for level r given levels 0..r-1:
  // base + sum_{u=1}^{r} C(r,u) sum_{s not taboo} p_is(rho0, u) x_s^{(r-u)}.
  std::vector<PowerSeries<S>> level_rhs(int r, std::vector<PowerSeries<S>> base,
                                        const std::vector<std::vector<PowerSeries<S>>>& lower)
      const {
    for (int u = 1; u <= r; ++u) {
      const S binom = scalar_traits<S>::from_long(binomial(r, u));
      for (int i = 1; i <= n_; ++i) {
        PowerSeries<S> acc(order_);
        for (int s = 1; s <= n_; ++s) {
          if (s == taboo_) continue;
          acc = acc + p_series(u, i, s) * lower[static_cast<size_t>(r - u)]
                                               [static_cast<size_t>(s - 1)];
        }
        base[static_cast<size_t>(i - 1)] = base[static_cast<size_t>(i - 1)] + binom * acc;
      }
    }
    return base;
  }

  int order() const { return order_; }

 private:
  int n_;
  int taboo_;
  int order_;
  std::vector<std::vector<std::vector<PowerSeries<S>>>> p_;
  std::vector<LuFactorization<S>> factor_;
};

}  // namespace detail

// b part of the table: series of phi_{i_ref, i_ref}(rho0, r) for r = 0..k+1,
// via the first-passage linear systems solved over power series.
template <class S>
void expand_phi(const detail::SeriesTabooSystem<S>& sys, const PerturbedSemiMarkovModel<S>& m,
                const S& rho0, int i_ref, int k, MomentSeriesTable<S>& table) {
  const int work = k + 1;
  std::vector<std::vector<PowerSeries<S>>> levels;
  for (int r = 0; r <= k + 1; ++r) {
    std::vector<PowerSeries<S>> base;
    base.reserve(static_cast<size_t>(m.num_states));
    for (int i = 1; i <= m.num_states; ++i)
      base.push_back(expand_p_functional(m, rho0, r, i, i_ref, work));
    levels.push_back(sys.solve(sys.level_rhs(r, std::move(base), levels)));
  }
  table.b.clear();
  table.phi_vec.clear();
  for (int r = 0; r <= k + 1; ++r) {
    std::vector<PowerSeries<S>> vec;
    for (int i = 1; i <= m.num_states; ++i)
      vec.push_back(with_order(levels[static_cast<size_t>(r)][static_cast<size_t>(i - 1)],
                               k + 1 - r));
    table.b.push_back(vec[static_cast<size_t>(i_ref - 1)]);
    table.phi_vec.push_back(std::move(vec));
  }
}

// a part of the table: series of omega_{i_ref, i_ref, j}(rho0, r), same
// taboo systems with sojourn-tail source terms.
template <class S>
void expand_omega(const detail::SeriesTabooSystem<S>& sys, const PerturbedSemiMarkovModel<S>& m,
                  const S& rho0, int i_ref, int k, MomentSeriesTable<S>& table) {
  const int work = k + 1;
  table.a.assign(static_cast<size_t>(m.num_states) + 1, {});
  table.omega_vec.assign(static_cast<size_t>(m.num_states) + 1, {});
  for (int s = 1; s <= m.num_states; ++s) {
    std::vector<std::vector<PowerSeries<S>>> levels;
    for (int r = 0; r <= k + 1; ++r) {
      // Source: delta_{is} * sum_{n < max_time} n^r e^{rho0 n} P_i{kappa > n}(eps).
      std::vector<PowerSeries<S>> base(static_cast<size_t>(m.num_states), PowerSeries<S>(work));
      PowerSeries<S> tail(work);
      for (int n = 0; n < m.max_time; ++n) {
        PowerSeries<S> surv(work);
        for (int t = n + 1; t <= m.max_time; ++t)
          for (int j = 0; j <= m.num_states; ++j)
            surv = surv + with_order(m.poly(s, j, t), work);
        tail = tail + (power_weight<S>(n, r) * scalar_traits<S>::exp_weight(rho0, n)) * surv;
      }
      base[static_cast<size_t>(s - 1)] = tail;
      levels.push_back(sys.solve(sys.level_rhs(r, std::move(base), levels)));
    }
    auto& a_rows = table.a[static_cast<size_t>(s)];
    auto& vec_rows = table.omega_vec[static_cast<size_t>(s)];
    for (int r = 0; r <= k + 1; ++r) {
      std::vector<PowerSeries<S>> vec;
      for (int i = 1; i <= m.num_states; ++i)
        vec.push_back(with_order(levels[static_cast<size_t>(r)][static_cast<size_t>(i - 1)],
                                 k + 1 - r));
      a_rows.push_back(vec[static_cast<size_t>(i_ref - 1)]);
      vec_rows.push_back(std::move(vec));
    }
  }
}

template <class S>
MomentSeriesTable<S> expand_moment_series(const PerturbedSemiMarkovModel<S>& m, const S& rho0,
                                          int i_ref, int k) {
  if (i_ref < 1 || i_ref > m.num_states)
    throw UsageError("reference state out of range");
  MomentSeriesTable<S> table;
  table.num_states = m.num_states;
  table.k = k;
  table.i_ref = i_ref;
  table.rho0 = rho0;
  detail::SeriesTabooSystem<S> sys(m, rho0, k + 1, i_ref, k + 1);
  expand_phi(sys, m, rho0, i_ref, k, table);
  expand_omega(sys, m, rho0, i_ref, k, table);

  // Characteristic identity at eps = 0: phi(rho0, 0) must equal 1.
  const S err = table.b[0].coeff(0) - scalar_traits<S>::one();
  if constexpr (scalar_traits<S>::exact) {
    if (!scalar_traits<S>::is_zero(err))
      throw CriticalityError("phi(rho0, 0) = " + scalar_traits<S>::str(table.b[0].coeff(0)) +
                             " at eps = 0; rho0 is not the limiting root");
  } else {
    if (!(abs_value(err) <= 1e-9))
      throw CriticalityError("phi(rho0, 0) deviates from 1 by " + scalar_traits<S>::str(err) +
                             " at eps = 0; rho0 is not the limiting root");
  }
  return table;
}

namespace detail {

// sum over all solutions (n_1..n_{q-1}) of n_1+..+n_{q-1} = m,
// sum p n_p = q of prod_p c_p^{n_p} / n_p!.
template <class S>
S partition_sum(int m, int q, const std::vector<S>& c) {
  S total = scalar_traits<S>::zero();
  for (const auto& sol : enumerate_partitions(m, q)) {
    S term = scalar_traits<S>::one();
    for (int p = 1; p <= q - 1; ++p) {
      const int np = sol.counts[static_cast<size_t>(p - 1)];
      if (np == 0) continue;
      S pw = scalar_traits<S>::one();
      for (int t = 0; t < np; ++t) pw *= c[static_cast<size_t>(p - 1)];
      term *= pw / scalar_traits<S>::from_long(factorial(np));
    }
    total += term;
  }
  return total;
}

template <class S>
S leading_return_moment(const MomentSeriesTable<S>& table) {
  const S b10 = table.b[1].coeff(0);
  bool degenerate;
  if constexpr (scalar_traits<S>::exact)
    degenerate = scalar_traits<S>::is_zero(b10);
  else
    degenerate = abs_value(b10) <= 1e-300;
  if (degenerate)
    throw DegenerateError("b[1,0] = phi(rho0, 1) vanishes at eps = 0; "
                          "root expansion undefined");
  return b10;
}

}  // namespace detail

// Root coefficients by the explicit recursion:
//   c_1 = -b[0,1] / b[1,0]
//   c_n = -(b[0,n] + sum_{q<n} b[1,n-q] c_q
//          + sum_{m=2}^{n} sum_{q=m}^{n} b[m,n-q] * partition sums) / b[1,0].
template <class S>
std::vector<S> expand_root_closed_form(const MomentSeriesTable<S>& table, int k) {
  if (k > table.k) throw UsageError("table truncated below requested order");
  std::vector<S> c;
  if (k == 0) return c;
  const S b10 = detail::leading_return_moment(table);
  c.push_back(-(table.b[0].coeff(1)) / b10);
  for (int n = 2; n <= k; ++n) {
    S acc = table.b[0].coeff(n);
    for (int q = 1; q <= n - 1; ++q)
      acc += table.b[1].coeff(n - q) * c[static_cast<size_t>(q - 1)];
    for (int m = 2; m <= n; ++m)
      for (int q = m; q <= n; ++q)
        acc += table.b[static_cast<size_t>(m)].coeff(n - q) * detail::partition_sum(m, q, c);
    c.push_back(-acc / b10);
  }
  return c;
}

// Same coefficients by series inversion: choose c_n so that the composite
// series sum_r (c eps + ...)^r / r! * b_r(eps) stays equal to 1 order by
// order.  Independent route used to cross-check the closed form.
template <class S>
std::vector<S> expand_root_inversion(const MomentSeriesTable<S>& table, int k) {
  if (k > table.k) throw UsageError("table truncated below requested order");
  std::vector<S> c;
  if (k == 0) return c;
  const S b10 = detail::leading_return_moment(table);
  for (int n = 1; n <= k; ++n) {
    PowerSeries<S> trial(n);
    for (int q = 1; q < n; ++q) trial.coeff(q) = c[static_cast<size_t>(q - 1)];
    const PowerSeries<S> composite = taylor_substitute(table.b, trial, n);
    c.push_back(-composite.coeff(n) / b10);
  }
  return c;
}

template <class S>
std::vector<S> expand_root(const MomentSeriesTable<S>& table, int k) {
  const auto closed = expand_root_closed_form(table, k);
  const auto inverted = expand_root_inversion(table, k);
  for (int n = 0; n < k; ++n) {
    const S diff = closed[static_cast<size_t>(n)] - inverted[static_cast<size_t>(n)];
    bool ok;
    if constexpr (scalar_traits<S>::exact)
      ok = scalar_traits<S>::is_zero(diff);
    else
      ok = abs_value(diff) <=
           1e-9 * std::max(1.0, abs_value(closed[static_cast<size_t>(n)]));
    if (!ok)
      throw Error("root coefficient routes disagree at order " + std::to_string(n + 1));
  }
  return closed;
}

// d coefficients of omega_iij at the perturbed root (closed form).
template <class S>
std::vector<PowerSeries<S>> expand_omega_at_root_closed_form(const MomentSeriesTable<S>& table,
                                                             const std::vector<S>& c, int k) {
  if (static_cast<int>(c.size()) < k) throw UsageError("need c_1..c_k");
  std::vector<PowerSeries<S>> d(static_cast<size_t>(table.num_states) + 1, PowerSeries<S>(k));
  for (int j = 1; j <= table.num_states; ++j) {
    const auto& rows = table.a[static_cast<size_t>(j)];
    PowerSeries<S>& dj = d[static_cast<size_t>(j)];
    dj.coeff(0) = rows[0].coeff(0);
    for (int n = 1; n <= k; ++n) {
      S acc = rows[0].coeff(n);
      for (int q = 1; q <= n; ++q)
        acc += rows[1].coeff(n - q) * c[static_cast<size_t>(q - 1)];
      for (int m = 2; m <= n; ++m)
        for (int q = m; q <= n; ++q)
          acc += rows[static_cast<size_t>(m)].coeff(n - q) * detail::partition_sum(m, q, c);
      dj.coeff(n) = acc;
    }
  }
  return d;
}

// Same via generic composition.
template <class S>
std::vector<PowerSeries<S>> expand_omega_at_root_substitute(const MomentSeriesTable<S>& table,
                                                            const std::vector<S>& c, int k) {
  if (static_cast<int>(c.size()) < k) throw UsageError("need c_1..c_k");
  PowerSeries<S> delta(k);
  for (int n = 1; n <= k; ++n) delta.coeff(n) = c[static_cast<size_t>(n - 1)];
  std::vector<PowerSeries<S>> d(static_cast<size_t>(table.num_states) + 1, PowerSeries<S>(k));
  for (int j = 1; j <= table.num_states; ++j)
    d[static_cast<size_t>(j)] = taylor_substitute(table.a[static_cast<size_t>(j)], delta, k);
  return d;
}

template <class S>
std::vector<PowerSeries<S>> expand_omega_at_root(const MomentSeriesTable<S>& table,
                                                 const std::vector<S>& c, int k) {
  const auto closed = expand_omega_at_root_closed_form(table, c, k);
  const auto composed = expand_omega_at_root_substitute(table, c, k);
  for (int j = 1; j <= table.num_states; ++j)
    for (int n = 0; n <= k; ++n) {
      const S diff = closed[static_cast<size_t>(j)].coeff(n) -
                     composed[static_cast<size_t>(j)].coeff(n);
      bool ok;
      if constexpr (scalar_traits<S>::exact)
        ok = scalar_traits<S>::is_zero(diff);
      else
        ok = abs_value(diff) <=
             1e-9 * std::max(1.0, abs_value(closed[static_cast<size_t>(j)].coeff(n)));
      if (!ok)
        throw Error("omega-at-root routes disagree for j = " + std::to_string(j) +
                    " at order " + std::to_string(n));
    }
  return closed;
}

// Quasi-stationary coefficients from the d table:
//   pi_j[0] = d_j[0] / e[0],
//   pi_j[n] = (d_j[n] - sum_{q<n} e[n-q] pi_j[q]) / e[0],  e[n] = sum_j d_j[n].
// This is exactly the coefficient recursion of the series quotient d_j / e.
template <class S>
QsdExpansion<S> expand_qsd(const std::vector<PowerSeries<S>>& d, int k) {
  QsdExpansion<S> out;
  out.num_states = static_cast<int>(d.size()) - 1;
  out.k = k;
  PowerSeries<S> e(k);
  for (int j = 1; j <= out.num_states; ++j) e = e + d[static_cast<size_t>(j)];
  if (!(scalar_traits<S>::zero() < e.coeff(0)))
    throw DegenerateError("e[0] = " + scalar_traits<S>::str(e.coeff(0)) +
                          " must be positive (total limiting occupation mass)");
  out.d = d;
  out.e = e;
  out.pi.assign(static_cast<size_t>(out.num_states) + 1, PowerSeries<S>(k));
  for (int j = 1; j <= out.num_states; ++j)
    out.pi[static_cast<size_t>(j)] = divide(d[static_cast<size_t>(j)], e);
  return out;
}

template <class S>
struct ExpandOptions {
  int i_ref = 1;
  bool check_i_ref_invariance = true;
  S root_tol = scalar_traits<S>::from_fraction(1, 100000000000000L);
};

namespace detail {

template <class S>
bool normalization_holds(const QsdExpansion<S>& q) {
  for (int n = 0; n <= q.k; ++n) {
    S sum = scalar_traits<S>::zero();
    for (int j = 1; j <= q.num_states; ++j) sum += q.pi[static_cast<size_t>(j)].coeff(n);
    const S want = n == 0 ? scalar_traits<S>::one() : scalar_traits<S>::zero();
    if constexpr (scalar_traits<S>::exact) {
      if (!(sum == want)) return false;
    } else {
      if (!(abs_value(sum - want) <= 1e-12)) return false;
    }
  }
  return true;
}

template <class S>
bool characteristic_identity_holds(const MomentSeriesTable<S>& table, const std::vector<S>& c,
                                   int k) {
  PowerSeries<S> delta(k);
  for (int n = 1; n <= k; ++n) delta.coeff(n) = c[static_cast<size_t>(n - 1)];
  const PowerSeries<S> composite = taylor_substitute(table.b, delta, k);
  for (int n = 0; n <= k; ++n) {
    const S want = n == 0 ? scalar_traits<S>::one() : scalar_traits<S>::zero();
    const S diff = composite.coeff(n) - want;
    if constexpr (scalar_traits<S>::exact) {
      if (!scalar_traits<S>::is_zero(diff)) return false;
    } else {
      if (!(abs_value(diff) <= 1e-9)) return false;
    }
  }
  return true;
}

template <class S>
QsdExpansion<S> expansion_for_reference(const PerturbedSemiMarkovModel<S>& m, int k,
                                        const ExpandOptions<S>& opt, int i_ref) {
  const auto limit = evaluate_at(m, scalar_traits<S>::zero());
  S rho0 = scalar_traits<S>::zero();
  if (!detect_zero_root(limit, i_ref))
    rho0 = solve_characteristic(limit, i_ref, opt.root_tol).rho;

  const auto table = expand_moment_series(m, rho0, i_ref, k);
  const auto c = expand_root(table, k);
  const auto d = expand_omega_at_root(table, c, k);
  auto q = expand_qsd(d, k);
  q.i_ref = i_ref;
  q.rho0 = rho0;
  q.c = c;
  q.diagnostics.backend = scalar_traits<S>::name();
  q.diagnostics.dual_route_ok = true;  // expand_root / expand_omega_at_root throw otherwise
  q.diagnostics.char_identity_ok = characteristic_identity_holds(table, c, k);
  q.diagnostics.normalization_ok = normalization_holds(q);
  if (!q.diagnostics.char_identity_ok)
    throw Error("characteristic identity violated by the computed root expansion");
  if (!q.diagnostics.normalization_ok)
    throw Error("quasi-stationary coefficients do not normalize");
  return q;
}

}  // namespace detail

// Full pipeline: validation, limiting root, moment series, root expansion,
// omega at the root, and the quasi-stationary coefficient recursion.
//
// Markov-chain models need perturbation data to order k; general semi-Markov
// models need order k+1.
template <class S>
QsdExpansion<S> compute_qsd_expansion(const PerturbedSemiMarkovModel<S>& m, int k,
                                      const ExpandOptions<S>& opt = {}) {
  if (k < 0) throw UsageError("negative expansion order");
  const int needed = m.is_markov_chain() ? k : k + 1;
  if (m.order < needed)
    throw OrderError("model carries perturbation data to order " + std::to_string(m.order) +
                     " but order " + std::to_string(needed) + " is required for a k = " +
                     std::to_string(k) + " expansion");
  const auto report = validate_conditions(m);
  if (!report.hard_ok()) {
    std::string msg = "model fails validation:";
    for (const auto& f : report.messages) msg += "\n  " + f;
    throw ModelError(msg);
  }

  auto q = detail::expansion_for_reference(m, k, opt, opt.i_ref);

  if (opt.check_i_ref_invariance) {
    q.diagnostics.i_ref_invariance_checked = true;
    q.diagnostics.i_ref_invariant = true;
    for (int i = 1; i <= m.num_states; ++i) {
      if (i == opt.i_ref) continue;
      const auto other = detail::expansion_for_reference(m, k, opt, i);
      for (int j = 1; j <= m.num_states && q.diagnostics.i_ref_invariant; ++j)
        for (int n = 0; n <= k; ++n) {
          const S diff = q.pi[static_cast<size_t>(j)].coeff(n) -
                         other.pi[static_cast<size_t>(j)].coeff(n);
          bool same;
          if constexpr (scalar_traits<S>::exact)
            same = scalar_traits<S>::is_zero(diff);
          else
            same = abs_value(diff) <= 1e-9;
          if (!same) {
            q.diagnostics.i_ref_invariant = false;
            break;
          }
        }
    }
  }
  return q;
}

}  // namespace qsd

#endif  // QSD_EXPAND_HPP
