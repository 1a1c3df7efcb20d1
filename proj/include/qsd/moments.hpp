#ifndef QSD_MOMENTS_HPP
#define QSD_MOMENTS_HPP

#include <map>
#include <tuple>
#include <vector>

#include "qsd/linalg.hpp"
#include "qsd/model.hpp"

namespace qsd {

// Mixed power-exponential moment functionals of a kernel at fixed eps:
//
//   p_ij(rho, r)    = sum_n n^r e^{rho n} Q_ij(n)
//   phi_ij(rho, r)  = sum_n n^r e^{rho n} g_ij(n)      (first passage to j, taboo 0)
//   omega_ijs(rho,r)= sum_n n^r e^{rho n} h_ijs(n)     (occupation of s, taboo {0, j})
//
// p is a finite sum over the sojourn support.  phi and omega solve
// first-step linear systems sharing the matrix I - A(rho), where
// A(rho)_{is} = p_is(rho, 0) with the taboo columns removed; the systems
// are triangular in r, so one factorization serves every level.

template <class S>
S moment_p(const ConcreteKernel<S>& k, const S& rho, int r, int i, int j) {
  if (i < 1 || i > k.num_states) throw UsageError("moment_p: source state out of range");
  S acc = scalar_traits<S>::zero();
  for (int n = 1; n <= k.max_time; ++n) {
    if (scalar_traits<S>::is_zero(k.at(i, j, n))) continue;
    acc += power_weight<S>(n, r) * scalar_traits<S>::exp_weight(rho, n) * k.at(i, j, n);
  }
  scalar_traits<S>::check(acc);
  return acc;
}

// sum_{n=0}^{max_time-1} n^r e^{rho n} P_i{kappa > n}: the transform of the
// time spent in the initial state before the first jump.  For Markov chains
// this is 1 at r = 0 and 0 for r >= 1.
template <class S>
S sojourn_tail_transform(const ConcreteKernel<S>& k, const S& rho, int r, int i) {
  if (i < 1 || i > k.num_states) throw UsageError("sojourn_tail_transform: state out of range");
  S acc = scalar_traits<S>::zero();
  for (int n = 0; n < k.max_time; ++n) {
    const S tail = k.survival(i, n);
    if (scalar_traits<S>::is_zero(tail)) continue;
    acc += power_weight<S>(n, r) * scalar_traits<S>::exp_weight(rho, n) * tail;
  }
  scalar_traits<S>::check(acc);
  return acc;
}

namespace detail {

// Shared scaffolding for the taboo systems: moments p_is(rho, u) for
// u = 0..r_max and the factorized limiting matrix I - A with column j
// (and implicitly column 0) removed.
template <class S>
struct TabooSystem {
  int num_states;
  int taboo_state;
  std::vector<Matrix<S>> p_moment;  // p_moment[u](i-1, s-1) = p_is(rho, u)
  std::vector<LuFactorization<S>> factor;  // single factorization of I - A

  TabooSystem(const ConcreteKernel<S>& k, const S& rho, int r_max, int j) {
    num_states = k.num_states;
    taboo_state = j;
    const int n = num_states;
    p_moment.reserve(static_cast<size_t>(r_max) + 1);
    for (int u = 0; u <= r_max; ++u) {
      Matrix<S> pu(n, n);
      for (int i = 1; i <= n; ++i)
        for (int s = 1; s <= n; ++s) pu(i - 1, s - 1) = moment_p(k, rho, u, i, s);
      p_moment.push_back(std::move(pu));
    }
    Matrix<S> a(n, n);
    for (int i = 1; i <= n; ++i)
      for (int s = 1; s <= n; ++s)
        a(i - 1, s - 1) = s == j ? scalar_traits<S>::zero() : p_moment[0](i - 1, s - 1);
    if (!spectral_radius_below_one(a))
      throw SupercriticalError("taboo system at rho = " + scalar_traits<S>::str(rho) +
                               " (taboo state " + std::to_string(j) +
                               ") has spectral radius >= 1");
    Matrix<S> m = Matrix<S>::identity(n);
    for (int i = 0; i < n; ++i)
      for (int s = 0; s < n; ++s) m(i, s) -= a(i, s);
    factor.emplace_back(std::move(m));
  }

  // One triangular level: solve x_i = base_i + sum_{s not taboo} sum_{u<=r}
  // C(r,u) p_is(rho,u) x_s^{(r-u)} given the lower levels.
  std::vector<S> solve_level(int r, const std::vector<S>& base,
                             const std::vector<std::vector<S>>& lower) const {
    const int n = num_states;
    std::vector<S> rhs = base;
    for (int u = 1; u <= r; ++u) {
      const S binom = scalar_traits<S>::from_long(binomial(r, u));
      for (int i = 1; i <= n; ++i) {
        S acc = scalar_traits<S>::zero();
        for (int s = 1; s <= n; ++s) {
          if (s == taboo_state) continue;
          acc += p_moment[static_cast<size_t>(u)](i - 1, s - 1) *
                 lower[static_cast<size_t>(r - u)][static_cast<size_t>(s - 1)];
        }
        rhs[static_cast<size_t>(i - 1)] += binom * acc;
      }
    }
    return factor[0].solve(rhs);
  }
};

}  // namespace detail

// First-passage transforms phi_ij(rho, r) for all i = 1..N and r = 0..r_max,
// for a fixed target j.
template <class S>
class HittingTransform {
 public:
  HittingTransform(const ConcreteKernel<S>& k, const S& rho, int r_max, int j)
      : target_(j), levels_() {
    if (j < 1 || j > k.num_states) throw UsageError("hitting_transform: target out of range");
    detail::TabooSystem<S> sys(k, rho, r_max, j);
    for (int r = 0; r <= r_max; ++r) {
      std::vector<S> base(static_cast<size_t>(k.num_states), scalar_traits<S>::zero());
      for (int i = 1; i <= k.num_states; ++i)
        base[static_cast<size_t>(i - 1)] = moment_p(k, rho, r, i, j);
      levels_.push_back(sys.solve_level(r, base, levels_));
    }
    for (const auto& level : levels_)
      for (const S& v : level) scalar_traits<S>::check(v);
  }

  // phi_ij(rho, r)
  const S& at(int i, int r) const {
    return levels_.at(static_cast<size_t>(r)).at(static_cast<size_t>(i - 1));
  }
  int target() const { return target_; }

 private:
  int target_;
  std::vector<std::vector<S>> levels_;
};

template <class S>
HittingTransform<S> hitting_transform(const ConcreteKernel<S>& k, const S& rho, int r_max, int j) {
  return HittingTransform<S>(k, rho, r_max, j);
}

// Occupation transforms omega_ijs(rho, r) for all i, s = 1..N and
// r = 0..r_max, with taboo set {0, j}.
template <class S>
class OccupationTransform {
 public:
  OccupationTransform(const ConcreteKernel<S>& k, const S& rho, int r_max, int j) : taboo_(j) {
    if (j < 1 || j > k.num_states) throw UsageError("occupation_transform: taboo out of range");
    detail::TabooSystem<S> sys(k, rho, r_max, j);
    const int n = k.num_states;
    by_s_.assign(static_cast<size_t>(n) + 1, {});
    for (int s = 1; s <= n; ++s) {
      auto& levels = by_s_[static_cast<size_t>(s)];
      for (int r = 0; r <= r_max; ++r) {
        std::vector<S> base(static_cast<size_t>(n), scalar_traits<S>::zero());
        base[static_cast<size_t>(s - 1)] = sojourn_tail_transform(k, rho, r, s);
        levels.push_back(sys.solve_level(r, base, levels));
      }
      for (const auto& level : levels)
        for (const S& v : level) scalar_traits<S>::check(v);
    }
  }

  // omega_ijs(rho, r); j is the taboo state fixed at construction.
  const S& at(int i, int s, int r) const {
    return by_s_.at(static_cast<size_t>(s))
        .at(static_cast<size_t>(r))
        .at(static_cast<size_t>(i - 1));
  }
  int taboo() const { return taboo_; }

 private:
  int taboo_;
  std::vector<std::vector<std::vector<S>>> by_s_;
};

template <class S>
OccupationTransform<S> occupation_transform(const ConcreteKernel<S>& k, const S& rho, int r_max,
                                            int j) {
  return OccupationTransform<S>(k, rho, r_max, j);
}

// Aggregated moment functionals of one kernel at one rho.
template <class S>
struct MomentTable {
  S rho = scalar_traits<S>::zero();
  int r_max = 0;
  std::map<std::tuple<int, int, int>, S> p;           // (i, j, r)
  std::map<std::tuple<int, int, int>, S> phi;         // (i, j, r), j != 0
  std::map<std::tuple<int, int, int, int>, S> omega;  // (i, j, s, r), j, s != 0
  std::map<std::pair<int, int>, S> g;                 // hitting probabilities phi_ij(0, 0)
};

template <class S>
MomentTable<S> build_moment_table(const ConcreteKernel<S>& k, const S& rho, int r_max) {
  MomentTable<S> t;
  t.rho = rho;
  t.r_max = r_max;
  for (int i = 1; i <= k.num_states; ++i)
    for (int j = 0; j <= k.num_states; ++j)
      for (int r = 0; r <= r_max; ++r) t.p[{i, j, r}] = moment_p(k, rho, r, i, j);
  for (int j = 1; j <= k.num_states; ++j) {
    const auto ht = hitting_transform(k, rho, r_max, j);
    const auto ot = occupation_transform(k, rho, r_max, j);
    for (int i = 1; i <= k.num_states; ++i) {
      for (int r = 0; r <= r_max; ++r) {
        t.phi[{i, j, r}] = ht.at(i, r);
        for (int s = 1; s <= k.num_states; ++s) t.omega[{i, j, s, r}] = ot.at(i, s, r);
      }
    }
  }
  const S zero = scalar_traits<S>::zero();
  for (int j = 1; j <= k.num_states; ++j) {
    const auto ht = hitting_transform(k, zero, 0, j);
    for (int i = 1; i <= k.num_states; ++i) t.g[{i, j}] = ht.at(i, 0);
  }
  return t;
}

}  // namespace qsd

#endif  // QSD_MOMENTS_HPP
