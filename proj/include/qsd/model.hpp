#ifndef QSD_MODEL_HPP
#define QSD_MODEL_HPP

#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "qsd/errors.hpp"
#include "qsd/series.hpp"

namespace qsd {

// Semi-Markov kernel at one fixed value of the perturbation parameter:
// q(i, j, n) is the probability of jumping from state i to state j with a
// sojourn of exactly n time steps.  State 0 is absorbing and has no row.
// Transition times have finite support: q(i, j, n) == 0 for n > max_time.
template <class S>
struct ConcreteKernel {
  int num_states = 0;  // N; states are {0, 1, ..., N} with 0 absorbing
  int max_time = 0;
  // entries[i][j][n-1], i in 1..N (index 0 unused), j in 0..N, n in 1..max_time
  std::vector<std::vector<std::vector<S>>> entries;

  static ConcreteKernel zero(int num_states, int max_time) {
    ConcreteKernel k;
    k.num_states = num_states;
    k.max_time = max_time;
    k.entries.assign(static_cast<size_t>(num_states) + 1,
                     std::vector<std::vector<S>>(
                         static_cast<size_t>(num_states) + 1,
                         std::vector<S>(static_cast<size_t>(max_time), scalar_traits<S>::zero())));
    return k;
  }

  const S& at(int i, int j, int n) const {
    return entries.at(static_cast<size_t>(i)).at(static_cast<size_t>(j)).at(
        static_cast<size_t>(n - 1));
  }
  S& at(int i, int j, int n) {
    return entries.at(static_cast<size_t>(i)).at(static_cast<size_t>(j)).at(
        static_cast<size_t>(n - 1));
  }

  S row_sum(int i) const {
    S acc = scalar_traits<S>::zero();
    for (int j = 0; j <= num_states; ++j)
      for (int n = 1; n <= max_time; ++n) acc += at(i, j, n);
    return acc;
  }

  // P_i{kappa > n}: probability the first sojourn lasts longer than n steps.
  // Computed as a tail sum, which stays exact for rationals and avoids
  // cancellation for floats.
  S survival(int i, int n) const {
    S acc = scalar_traits<S>::zero();
    for (int m = n + 1; m <= max_time; ++m)
      for (int j = 0; j <= num_states; ++j) acc += at(i, j, m);
    return acc;
  }

  bool has_edge(int i, int j) const {
    for (int n = 1; n <= max_time; ++n)
      if (scalar_traits<S>::zero() < at(i, j, n)) return true;
    return false;
  }

  void check_valid() const {
    for (int i = 1; i <= num_states; ++i) {
      for (int j = 0; j <= num_states; ++j)
        for (int n = 1; n <= max_time; ++n)
          if (at(i, j, n) < scalar_traits<S>::zero())
            throw EvaluationError("negative kernel entry at (" + std::to_string(i) + "," +
                                  std::to_string(j) + "," + std::to_string(n) + ")");
      const S sum = row_sum(i);
      if constexpr (scalar_traits<S>::exact) {
        if (!(sum == scalar_traits<S>::one()))
          throw EvaluationError("row " + std::to_string(i) + " sums to " +
                                scalar_traits<S>::str(sum) + ", expected 1");
      } else {
        if (!(abs_value(sum - scalar_traits<S>::one()) <= 1e-9))
          throw EvaluationError("row " + std::to_string(i) + " sums to " +
                                scalar_traits<S>::str(sum) + ", expected 1");
      }
    }
  }
};

// Family of semi-Markov kernels depending polynomially on the perturbation
// parameter eps.  Each entry is a polynomial of degree <= order; the family
// is declared valid (entries in [0,1], rows stochastic) on [0, eps_max].
template <class S>
struct PerturbedSemiMarkovModel {
  int num_states = 0;
  int order = 0;
  int max_time = 0;
  S eps_max = scalar_traits<S>::zero();
  // kernel[i][j][n-1] as in ConcreteKernel, each a PowerSeries of degree `order`
  std::vector<std::vector<std::vector<PowerSeries<S>>>> kernel;

  const PowerSeries<S>& poly(int i, int j, int n) const {
    return kernel.at(static_cast<size_t>(i)).at(static_cast<size_t>(j)).at(
        static_cast<size_t>(n - 1));
  }
  PowerSeries<S>& poly(int i, int j, int n) {
    return kernel.at(static_cast<size_t>(i)).at(static_cast<size_t>(j)).at(
        static_cast<size_t>(n - 1));
  }

  bool is_markov_chain() const { return max_time == 1; }
};

template <class S>
struct ValidationReport {
  bool stochastic_ok = false;
  bool communication_ok = false;          // condition on g_ij^(0) > 0 for all i,j != 0
  std::vector<std::vector<bool>> communicates;  // witness: [i][j] true iff g_ij^(0) > 0
  bool nonperiodic_ok = false;
  std::vector<int> period;                // per state 1..N; 0 = no return cycle at eps=0
  bool limit_absorption_free = false;     // p_i0^(0) == 0 for all i != 0
  std::vector<std::string> messages;

  // The checks the expansion pipeline refuses to run without.
  bool hard_ok() const { return stochastic_ok && communication_ok && nonperiodic_ok; }
};

namespace detail {

template <class S>
PerturbedSemiMarkovModel<S> empty_model(int num_states, int order, int max_time) {
  if (num_states < 1) throw ModelError("model needs at least one non-absorbing state");
  if (order < 0) throw ModelError("negative expansion order");
  if (max_time < 1) throw ModelError("max_time must be at least 1");
  PerturbedSemiMarkovModel<S> m;
  m.num_states = num_states;
  m.order = order;
  m.max_time = max_time;
  m.kernel.assign(
      static_cast<size_t>(num_states) + 1,
      std::vector<std::vector<PowerSeries<S>>>(
          static_cast<size_t>(num_states) + 1,
          std::vector<PowerSeries<S>>(static_cast<size_t>(max_time), PowerSeries<S>(order))));
  return m;
}

// Row sums must be identically 1 on the validity interval: the constant
// layer sums to 1 and every higher layer sums to 0.
template <class S>
void check_symbolic_row_sums(const PerturbedSemiMarkovModel<S>& m) {
  for (int i = 1; i <= m.num_states; ++i) {
    PowerSeries<S> sum(m.order);
    for (int j = 0; j <= m.num_states; ++j)
      for (int n = 1; n <= m.max_time; ++n) sum = sum + m.poly(i, j, n);
    for (int layer = 0; layer <= m.order; ++layer) {
      const S want = layer == 0 ? scalar_traits<S>::one() : scalar_traits<S>::zero();
      const S got = sum.coeff(layer);
      bool ok;
      if constexpr (scalar_traits<S>::exact)
        ok = got == want;
      else
        ok = abs_value(got - want) <= 1e-12;
      if (!ok)
        throw ModelError("row " + std::to_string(i) + " is not stochastic: eps^" +
                         std::to_string(layer) + " layer sums to " + scalar_traits<S>::str(got));
    }
  }
}

}  // namespace detail

// Largest sampled eps with all entries still in [0,1], halved.  Used when a
// model file does not declare eps_max.
template <class S>
S default_eps_max(const PerturbedSemiMarkovModel<S>& m) {
  constexpr long kGrid = 64;
  constexpr long kMaxT = 2 * kGrid;  // sample up to eps = 2
  long last_good = 0;
  for (long t = 1; t <= kMaxT; ++t) {
    const S eps = scalar_traits<S>::from_fraction(t, kGrid);
    bool ok = true;
    for (int i = 1; i <= m.num_states && ok; ++i)
      for (int j = 0; j <= m.num_states && ok; ++j)
        for (int n = 1; n <= m.max_time && ok; ++n) {
          const S v = m.poly(i, j, n)(eps);
          if (v < scalar_traits<S>::zero() || scalar_traits<S>::one() < v) ok = false;
        }
    if (!ok) break;
    last_good = t;
  }
  return scalar_traits<S>::from_fraction(last_good, 2 * kGrid);
}

// Build a general semi-Markov model from explicit kernel polynomials.
// transitions: tuples (from, to, time, poly).  Omitted entries are zero.
template <class S>
struct TransitionEntry {
  int from = 0;
  int to = 0;
  int time = 1;
  std::vector<S> poly;  // coefficients, constant term first
};

template <class S>
PerturbedSemiMarkovModel<S> make_model(int num_states, int order,
                                       const std::vector<TransitionEntry<S>>& transitions,
                                       std::optional<S> eps_max = std::nullopt) {
  int max_time = 1;
  for (const auto& t : transitions) max_time = std::max(max_time, t.time);
  auto m = detail::empty_model<S>(num_states, order, max_time);
  std::vector<bool> seen(static_cast<size_t>((num_states + 1) * (num_states + 1) * max_time),
                         false);
  for (const auto& t : transitions) {
    if (t.from < 1 || t.from > num_states)
      throw ModelError("transition 'from' state " + std::to_string(t.from) + " out of range");
    if (t.to < 0 || t.to > num_states)
      throw ModelError("transition 'to' state " + std::to_string(t.to) + " out of range");
    if (t.time < 1) throw ModelError("transition time must be >= 1");
    if (static_cast<int>(t.poly.size()) > order + 1)
      throw ModelError("transition polynomial degree exceeds model order");
    const size_t key = (static_cast<size_t>(t.from) * (num_states + 1) + t.to) * max_time +
                       (t.time - 1);
    if (seen[key])
      throw ModelError("duplicate transition (" + std::to_string(t.from) + "," +
                       std::to_string(t.to) + "," + std::to_string(t.time) + ")");
    seen[key] = true;
    PowerSeries<S> p(order);
    for (size_t c = 0; c < t.poly.size(); ++c) p.coeff(static_cast<int>(c)) = t.poly[c];
    m.poly(t.from, t.to, t.time) = p;
  }
  detail::check_symbolic_row_sums(m);
  m.eps_max = eps_max ? *eps_max : default_eps_max(m);
  return m;
}

// Markov-chain specialization: all sojourn times equal 1, so the kernel is
// just the embedded transition matrix.  p_coeffs is (N+1)x(N+1) with rows
// i = 1..N used; row 0 (the absorbing state) is ignored.
template <class S>
PerturbedSemiMarkovModel<S> from_markov_chain(
    const std::vector<std::vector<PowerSeries<S>>>& p_coeffs, int order,
    std::optional<S> eps_max = std::nullopt) {
  if (p_coeffs.empty()) throw ModelError("empty transition matrix");
  const int num_states = static_cast<int>(p_coeffs.size()) - 1;
  std::vector<TransitionEntry<S>> transitions;
  for (int i = 1; i <= num_states; ++i) {
    if (static_cast<int>(p_coeffs[static_cast<size_t>(i)].size()) != num_states + 1)
      throw ModelError("transition matrix row " + std::to_string(i) + " has wrong length");
    for (int j = 0; j <= num_states; ++j) {
      const auto& poly = p_coeffs[static_cast<size_t>(i)][static_cast<size_t>(j)];
      if (poly.is_zero()) continue;
      TransitionEntry<S> t;
      t.from = i;
      t.to = j;
      t.time = 1;
      t.poly = with_order(poly, order).coeffs();
      transitions.push_back(std::move(t));
    }
  }
  return make_model<S>(num_states, order, transitions, eps_max);
}

// Pointwise kernel evaluation.  No renormalization is applied: entries out
// of [0,1] or row sums away from 1 are reported as errors.
template <class S>
ConcreteKernel<S> evaluate_at(const PerturbedSemiMarkovModel<S>& m, const S& eps) {
  if (eps < scalar_traits<S>::zero() || m.eps_max < eps)
    throw EvaluationError("eps = " + scalar_traits<S>::str(eps) +
                          " outside the declared validity interval [0, " +
                          scalar_traits<S>::str(m.eps_max) + "]");
  auto k = ConcreteKernel<S>::zero(m.num_states, m.max_time);
  for (int i = 1; i <= m.num_states; ++i)
    for (int j = 0; j <= m.num_states; ++j)
      for (int n = 1; n <= m.max_time; ++n) {
        S v = m.poly(i, j, n)(eps);
        if constexpr (!scalar_traits<S>::exact) {
          if (v < 0.0 && v >= -1e-12) v = 0.0;  // roundoff of an exact zero
        }
        k.at(i, j, n) = v;
      }
  k.check_valid();
  return k;
}

namespace detail {

// Reachability within {1..N} by paths of length >= 1 (state 0 is taboo).
template <class S>
std::vector<std::vector<bool>> taboo_reachability(const ConcreteKernel<S>& k) {
  const int n = k.num_states;
  std::vector reach(static_cast<size_t>(n) + 1, std::vector<bool>(static_cast<size_t>(n) + 1));
  for (int i = 1; i <= n; ++i) {
    std::queue<int> bfs;
    for (int j = 1; j <= n; ++j)
      if (k.has_edge(i, j) && !reach[static_cast<size_t>(i)][static_cast<size_t>(j)]) {
        reach[static_cast<size_t>(i)][static_cast<size_t>(j)] = true;
        bfs.push(j);
      }
    while (!bfs.empty()) {
      const int u = bfs.front();
      bfs.pop();
      for (int j = 1; j <= n; ++j)
        if (k.has_edge(u, j) && !reach[static_cast<size_t>(i)][static_cast<size_t>(j)]) {
          reach[static_cast<size_t>(i)][static_cast<size_t>(j)] = true;
          bfs.push(j);
        }
    }
  }
  return reach;
}

// gcd of the time-lengths of all closed walks through each state, avoiding
// state 0.  Computed per strongly connected component of the taboo support
// graph: label vertices with tree distances from a root, then fold
// |dist(u) + w - dist(v)| over every internal edge into the gcd.
template <class S>
std::vector<int> taboo_periods(const ConcreteKernel<S>& k,
                               const std::vector<std::vector<bool>>& reach) {
  const int n = k.num_states;
  std::vector<int> period(static_cast<size_t>(n) + 1, 0);
  std::vector<bool> done(static_cast<size_t>(n) + 1, false);
  for (int i = 1; i <= n; ++i) {
    if (done[static_cast<size_t>(i)]) continue;
    if (!reach[static_cast<size_t>(i)][static_cast<size_t>(i)]) {
      done[static_cast<size_t>(i)] = true;  // no cycle through i: period undefined
      continue;
    }
    std::vector<int> members;
    for (int s = 1; s <= n; ++s)
      if (s == i || (reach[static_cast<size_t>(i)][static_cast<size_t>(s)] &&
                     reach[static_cast<size_t>(s)][static_cast<size_t>(i)]))
        members.push_back(s);
    std::vector<bool> in_scc(static_cast<size_t>(n) + 1, false);
    for (int s : members) in_scc[static_cast<size_t>(s)] = true;

    std::vector<long> dist(static_cast<size_t>(n) + 1, -1);
    dist[static_cast<size_t>(i)] = 0;
    std::queue<int> bfs;
    bfs.push(i);
    while (!bfs.empty()) {
      const int u = bfs.front();
      bfs.pop();
      for (int v : members)
        for (int t = 1; t <= k.max_time; ++t)
          if (scalar_traits<S>::zero() < k.at(u, v, t) && dist[static_cast<size_t>(v)] < 0) {
            dist[static_cast<size_t>(v)] = dist[static_cast<size_t>(u)] + t;
            bfs.push(v);
          }
    }
    long g = 0;
    for (int u : members)
      for (int v : members)
        for (int t = 1; t <= k.max_time; ++t)
          if (scalar_traits<S>::zero() < k.at(u, v, t))
            g = std::gcd(g, std::abs(dist[static_cast<size_t>(u)] + t -
                                     dist[static_cast<size_t>(v)]));
    for (int s : members) {
      period[static_cast<size_t>(s)] = static_cast<int>(g);
      done[static_cast<size_t>(s)] = true;
    }
  }
  return period;
}

}  // namespace detail

// Checks the structural conditions the expansion theory needs: stochastic
// rows on the validity interval, mutual taboo reachability at eps = 0, and
// a non-periodic return-time distribution at eps = 0.  Failures are
// reported, not thrown.
template <class S>
ValidationReport<S> validate_conditions(const PerturbedSemiMarkovModel<S>& m) {
  ValidationReport<S> rep;
  rep.stochastic_ok = true;
  try {
    detail::check_symbolic_row_sums(m);
  } catch (const ModelError& e) {
    rep.stochastic_ok = false;
    rep.messages.push_back(e.what());
  }
  // Numeric spot checks across the validity interval.
  for (long den : {1L, 2L, 4L}) {
    try {
      evaluate_at(m, m.eps_max * scalar_traits<S>::from_fraction(1, den));
    } catch (const EvaluationError& e) {
      rep.stochastic_ok = false;
      rep.messages.push_back(std::string("spot check: ") + e.what());
    }
  }

  const auto limit = evaluate_at(m, scalar_traits<S>::zero());
  const auto reach = detail::taboo_reachability(limit);
  const int n = m.num_states;

  rep.communicates.assign(static_cast<size_t>(n) + 1,
                          std::vector<bool>(static_cast<size_t>(n) + 1, false));
  rep.communication_ok = true;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      rep.communicates[static_cast<size_t>(i)][static_cast<size_t>(j)] =
          reach[static_cast<size_t>(i)][static_cast<size_t>(j)];
      if (!reach[static_cast<size_t>(i)][static_cast<size_t>(j)]) {
        rep.communication_ok = false;
        rep.messages.push_back("state " + std::to_string(j) + " unreachable from state " +
                               std::to_string(i) + " avoiding 0 in the limiting kernel");
      }
    }

  rep.period = detail::taboo_periods(limit, reach);
  rep.nonperiodic_ok = false;
  for (int i = 1; i <= n; ++i)
    if (rep.period[static_cast<size_t>(i)] == 1) rep.nonperiodic_ok = true;
  if (!rep.nonperiodic_ok)
    rep.messages.push_back("no state has an aperiodic taboo return-time distribution at eps = 0");

  rep.limit_absorption_free = true;
  for (int i = 1; i <= n; ++i)
    if (limit.has_edge(i, 0)) rep.limit_absorption_free = false;

  return rep;
}

// Scalar-backend conversion (rational models feed the float pipeline).
template <class To, class From>
PerturbedSemiMarkovModel<To> convert_model(const PerturbedSemiMarkovModel<From>& m) {
  auto out = detail::empty_model<To>(m.num_states, m.order, m.max_time);
  const auto cvt = [](const From& v) {
    return static_cast<To>(scalar_traits<From>::to_double(v));
  };
  for (int i = 1; i <= m.num_states; ++i)
    for (int j = 0; j <= m.num_states; ++j)
      for (int n = 1; n <= m.max_time; ++n)
        for (int c = 0; c <= m.order; ++c)
          out.poly(i, j, n).coeff(c) = cvt(m.poly(i, j, n).coeff(c));
  out.eps_max = cvt(m.eps_max);
  return out;
}

}  // namespace qsd

#endif  // QSD_MODEL_HPP
