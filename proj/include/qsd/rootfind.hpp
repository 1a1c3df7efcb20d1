#ifndef QSD_ROOTFIND_HPP
#define QSD_ROOTFIND_HPP

#include <optional>

#include "qsd/moments.hpp"

namespace qsd {

template <class S>
struct RootResult {
  S rho = scalar_traits<S>::zero();
  S residual = scalar_traits<S>::zero();  // phi_ii(rho) - 1
  int iterations = 0;
  int reference_state = 1;
};

// True iff g_ii == 1: the process started at i returns to i before
// absorption with probability one, so the characteristic root is exactly 0.
// Decided on the support graph, which is exact for both backends: returns
// are certain iff no excursion from i can reach 0 or get trapped in a set
// that cannot reach i.
template <class S>
bool detect_zero_root(const ConcreteKernel<S>& k, int i = 1) {
  if (i < 1 || i > k.num_states) throw UsageError("detect_zero_root: state out of range");
  const int n = k.num_states;
  // States reachable from i by paths whose intermediate states avoid i.
  std::vector<bool> seen(static_cast<size_t>(n) + 1, false);
  std::vector<int> stack;
  for (int v = 0; v <= n; ++v)
    if (k.has_edge(i, v) && v != i) {
      seen[static_cast<size_t>(v)] = true;
      stack.push_back(v);
    }
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    if (u == 0) continue;  // absorbing, no out-edges
    for (int v = 0; v <= n; ++v)
      if (k.has_edge(u, v) && v != i && !seen[static_cast<size_t>(v)]) {
        seen[static_cast<size_t>(v)] = true;
        stack.push_back(v);
      }
  }
  if (seen[0]) return false;  // absorption reachable before return
  const auto reach = detail::taboo_reachability(k);
  for (int t = 1; t <= n; ++t)
    if (seen[static_cast<size_t>(t)] && !reach[static_cast<size_t>(t)][static_cast<size_t>(i)])
      return false;  // excursion can drift somewhere that never comes back
  return true;
}

namespace detail {

// phi_ii(rho, 0), with divergence reported instead of thrown.
template <class S>
std::optional<S> phi_return_mass(const ConcreteKernel<S>& k, const S& rho, int i) {
  try {
    return hitting_transform(k, rho, 0, i).at(i, 0);
  } catch (const SupercriticalError&) {
    return std::nullopt;  // treat as phi = +infinity
  }
}

}  // namespace detail

// Solves phi_ii(rho) = 1 for the unique non-negative root by bisection on
// the increasing map rho -> phi_ii(rho, 0).  A supercritical taboo system
// during bracketing counts as phi = +infinity and shrinks the upper end.
template <class S>
RootResult<S> solve_characteristic(const ConcreteKernel<S>& k, int i, const S& tol) {
  if (i < 1 || i > k.num_states) throw UsageError("solve_characteristic: state out of range");
  const auto reach = detail::taboo_reachability(k);
  if (!reach[static_cast<size_t>(i)][static_cast<size_t>(i)])
    throw NoReturnError("state " + std::to_string(i) +
                        " has no return path avoiding 0 (g_ii = 0)");

  RootResult<S> out;
  out.reference_state = i;
  const S zero = scalar_traits<S>::zero();
  const S one = scalar_traits<S>::one();

  if (detect_zero_root(k, i)) {
    out.rho = zero;
    out.residual = *detail::phi_return_mass(k, zero, i) - one;
    return out;
  }

  if constexpr (scalar_traits<S>::exact)
    throw BackendError("characteristic root is nonzero; exact rational arithmetic only certifies "
                       "rho = 0 (use the float backend)");

  const auto phi0 = detail::phi_return_mass(k, zero, i);
  if (!phi0) throw SupercriticalError("return transform diverges at rho = 0");
  if (one < *phi0 - tol)
    throw Error("internal: phi_ii(0) = " + scalar_traits<S>::str(*phi0) + " exceeds 1");

  // Bracket by doubling until phi crosses 1 (or diverges).
  S lo = zero;
  S hi = one;
  int iter = 0;
  while (true) {
    ++iter;
    const auto v = detail::phi_return_mass(k, hi, i);
    if (!v || one < *v) break;
    lo = hi;
    hi = hi + hi;
    if (iter > 200) throw Error("internal: characteristic bracket did not close");
  }

  while (tol * std::max(one, lo) < hi - lo) {
    ++iter;
    const S mid = (lo + hi) / 2;
    const auto v = detail::phi_return_mass(k, mid, i);
    if (!v || one < *v)
      hi = mid;
    else
      lo = mid;
  }

  S rho = (lo + hi) / 2;
  auto v = detail::phi_return_mass(k, rho, i);
  if (!v) {
    rho = lo;
    v = detail::phi_return_mass(k, rho, i);
  }
  out.rho = rho;
  out.residual = *v - one;
  out.iterations = iter;
  return out;
}

template <class S>
RootResult<S> solve_characteristic(const ConcreteKernel<S>& k, int i) {
  return solve_characteristic(k, i, scalar_traits<S>::from_fraction(1, 100000000000000L));
}

}  // namespace qsd

#endif  // QSD_ROOTFIND_HPP
