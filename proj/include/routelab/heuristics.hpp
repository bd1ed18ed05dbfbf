#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "routelab/problem.hpp"

namespace routelab::heuristics {

// ---------------------------------------------------------------------------
// Classical baselines: a giant-tour genetic algorithm with an optimal-split
// decoding pass, and iterated local search over 2-opt / relocate / swap
// neighborhoods. Both optimize the full objective (travel plus window
// penalties) and are fully deterministic for a fixed seed.
// ---------------------------------------------------------------------------

struct GaConfig {
  int population = 100;
  int max_iters = 300;
  double crossover_rate = 0.80;
  double mutation_rate = 0.05;
  int stall_limit = 5;
  std::uint64_t seed = 0;
};

struct IlsConfig {
  int max_iters = 100;
  int stall_limit = 5;
  int perturbation_strength = 2;
  std::uint64_t seed = 0;
};

inline GaConfig ga1_config(std::uint64_t seed = 0) { return GaConfig{100, 300, 0.80, 0.05, 5, seed}; }
inline GaConfig ga2_config(std::uint64_t seed = 0) { return GaConfig{300, 1000, 0.80, 0.05, 5, seed}; }
inline IlsConfig ils1_config(std::uint64_t seed = 0) { return IlsConfig{100, 5, 2, seed}; }
inline IlsConfig ils2_config(std::uint64_t seed = 0) { return IlsConfig{500, 5, 2, seed}; }

struct DistanceMatrix {
  int n = 0;                // customer count; index 0 is the depot
  std::vector<double> d;

  double at(int i, int j) const { return d[static_cast<std::size_t>(i) * (n + 1) + j]; }
};

inline DistanceMatrix build_distance_matrix(const Instance& inst) {
  DistanceMatrix dm;
  dm.n = inst.n_customers();
  const int size = dm.n + 1;
  dm.d.assign(static_cast<std::size_t>(size) * size, 0.0);
  auto coord = [&](int i) { return i == 0 ? inst.depot : inst.customer(i).coord; };
  for (int i = 0; i < size; ++i) {
    for (int j = i + 1; j < size; ++j) {
      const double dist = euclidean_distance(coord(i), coord(j));
      dm.d[static_cast<std::size_t>(i) * size + j] = dist;
      dm.d[static_cast<std::size_t>(j) * size + i] = dist;
    }
  }
  return dm;
}

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kImprovementEps = 1e-9;

inline double capacity_slack(const Instance& inst) { return inst.capacity * (1.0 + 1e-12); }

inline double route_cost(const Instance& inst, const DistanceMatrix& dm, const std::vector<int>& route) {
  if (route.empty()) return 0.0;
  double travel = 0.0;
  double penalty = 0.0;
  double clock = 0.0;
  int prev = 0;
  for (int id : route) {
    const double leg = dm.at(prev, id);
    travel += leg;
    clock += leg;
    penalty += window_penalty(clock, inst.customer(id));
    prev = id;
  }
  travel += dm.at(prev, 0);
  return travel + penalty;
}

inline double route_travel(const DistanceMatrix& dm, const std::vector<int>& route) {
  if (route.empty()) return 0.0;
  double travel = 0.0;
  int prev = 0;
  for (int id : route) {
    travel += dm.at(prev, id);
    prev = id;
  }
  return travel + dm.at(prev, 0);
}

inline double route_load(const Instance& inst, const std::vector<int>& route) {
  double load = 0.0;
  for (int id : route) load += inst.customer(id).demand;
  return load;
}

inline double solution_cost(const Instance& inst, const DistanceMatrix& dm, const Routes& routes) {
  double cost = 0.0;
  for (const auto& r : routes) cost += route_cost(inst, dm, r);
  return cost;
}

// ---- giant-tour split -----------------------------------------------------

// Minimum-cost split of a giant tour into at most max_routes consecutive,
// capacity-feasible segments (shortest path in the segment DAG, layered by
// route count). Returns nullopt when no such split exists.
inline std::optional<Routes> split_giant_tour(const Instance& inst, const DistanceMatrix& dm,
                                              const std::vector<int>& perm, int max_routes) {
  const int n = static_cast<int>(perm.size());
  const double cap = capacity_slack(inst);
  // arc[i][j] = cost of one route serving perm[i..j-1]; infeasible arcs +inf.
  std::vector<double> arc(static_cast<std::size_t>(n + 1) * (n + 1), kInf);
  for (int i = 0; i < n; ++i) {
    double load = 0.0;
    double travel = 0.0;
    double penalty = 0.0;
    double clock = 0.0;
    int prev = 0;
    for (int j = i + 1; j <= n; ++j) {
      const int id = perm[static_cast<std::size_t>(j - 1)];
      load += inst.customer(id).demand;
      if (load > cap) break;
      const double leg = dm.at(prev, id);
      travel += leg;
      clock += leg;
      penalty += window_penalty(clock, inst.customer(id));
      prev = id;
      arc[static_cast<std::size_t>(i) * (n + 1) + j] = travel + dm.at(id, 0) + penalty;
    }
  }

  std::vector<double> prev_dp(static_cast<std::size_t>(n + 1), kInf);
  prev_dp[0] = 0.0;
  // cut[k][j]: start index of the final segment when covering j customers
  // with at most k routes (-1 = carried over from the k-1 layer).
  std::vector<std::vector<int>> cut(static_cast<std::size_t>(max_routes + 1),
                                    std::vector<int>(static_cast<std::size_t>(n + 1), -1));
  std::vector<double> dp(static_cast<std::size_t>(n + 1), kInf);
  for (int k = 1; k <= max_routes; ++k) {
    dp = prev_dp;
    for (int j = 1; j <= n; ++j) {
      for (int i = 0; i < j; ++i) {
        if (prev_dp[static_cast<std::size_t>(i)] == kInf) continue;
        const double a = arc[static_cast<std::size_t>(i) * (n + 1) + j];
        if (a == kInf) continue;
        const double cand = prev_dp[static_cast<std::size_t>(i)] + a;
        if (cand < dp[static_cast<std::size_t>(j)]) {
          dp[static_cast<std::size_t>(j)] = cand;
          cut[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = i;
        }
      }
    }
    prev_dp = dp;
  }
  if (dp[static_cast<std::size_t>(n)] == kInf) return std::nullopt;

  Routes routes;
  int j = n;
  int k = max_routes;
  while (j > 0) {
    const int i = cut[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
    if (i < 0) {
      --k;  // layer k kept the k-1 solution for this prefix
      continue;
    }
    routes.emplace_back(perm.begin() + i, perm.begin() + j);
    j = i;
    --k;
  }
  std::reverse(routes.begin(), routes.end());
  routes.resize(static_cast<std::size_t>(inst.fleet_size));
  return routes;
}

// Fallback when no consecutive split exists: first-fit the tour order into
// the M vehicles.
inline std::optional<Routes> first_fit_split(const Instance& inst, const std::vector<int>& perm) {
  const double cap = capacity_slack(inst);
  Routes routes(static_cast<std::size_t>(inst.fleet_size));
  std::vector<double> load(static_cast<std::size_t>(inst.fleet_size), 0.0);
  for (int id : perm) {
    const double demand = inst.customer(id).demand;
    bool placed = false;
    for (std::size_t m = 0; m < routes.size(); ++m) {
      if (load[m] + demand <= cap) {
        routes[m].push_back(id);
        load[m] += demand;
        placed = true;
        break;
      }
    }
    if (!placed) return std::nullopt;
  }
  return routes;
}

// ---- GA operators ----------------------------------------------------------

inline std::vector<int> ox_crossover(const std::vector<int>& a, const std::vector<int>& b, Rng& rng) {
  const int n = static_cast<int>(a.size());
  int i = rng.uniform_int(n);
  int j = rng.uniform_int(n);
  if (i > j) std::swap(i, j);
  std::vector<int> child(static_cast<std::size_t>(n), 0);
  std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
  for (int k = i; k <= j; ++k) {
    child[static_cast<std::size_t>(k)] = a[static_cast<std::size_t>(k)];
    used[static_cast<std::size_t>(a[static_cast<std::size_t>(k)])] = 1;
  }
  int write = (j + 1) % n;
  for (int k = 0; k < n; ++k) {
    const int gene = b[static_cast<std::size_t>((j + 1 + k) % n)];
    if (used[static_cast<std::size_t>(gene)]) continue;
    child[static_cast<std::size_t>(write)] = gene;
    write = (write + 1) % n;
  }
  return child;
}

inline void swap_mutation(std::vector<int>& perm, double rate, Rng& rng) {
  const int n = static_cast<int>(perm.size());
  for (int p = 0; p < n; ++p) {
    if (rng.uniform() < rate) {
      const int q = rng.uniform_int(n);
      std::swap(perm[static_cast<std::size_t>(p)], perm[static_cast<std::size_t>(q)]);
    }
  }
}

// ---- local search -----------------------------------------------------------

struct LsState {
  Routes routes;
  std::vector<double> cost;  // per route
  std::vector<double> load;

  double total() const { return std::accumulate(cost.begin(), cost.end(), 0.0); }
};

inline LsState make_ls_state(const Instance& inst, const DistanceMatrix& dm, Routes routes) {
  LsState s;
  s.routes = std::move(routes);
  s.routes.resize(static_cast<std::size_t>(inst.fleet_size));
  s.cost.resize(s.routes.size());
  s.load.resize(s.routes.size());
  for (std::size_t r = 0; r < s.routes.size(); ++r) {
    s.cost[r] = route_cost(inst, dm, s.routes[r]);
    s.load[r] = route_load(inst, s.routes[r]);
  }
  return s;
}

enum class MoveKind { None, TwoOpt, Relocate, Swap };

struct Move {
  MoveKind kind = MoveKind::None;
  int a = 0, b = 0;  // route indices
  int i = 0, j = 0;  // positions
  double delta = 0.0;
};

// Scans all neighborhoods and returns the single best strictly improving
// move, or kind == None.
inline Move best_improving_move(const Instance& inst, const DistanceMatrix& dm, const LsState& s) {
  Move best;
  best.delta = -1e-12;
  const double cap = capacity_slack(inst);
  std::vector<int> scratch;

  const int R = static_cast<int>(s.routes.size());
  for (int a = 0; a < R; ++a) {
    const auto& ra = s.routes[static_cast<std::size_t>(a)];
    const int la = static_cast<int>(ra.size());
    // intra-route 2-opt: reverse segment [i, j]
    for (int i = 0; i + 1 < la; ++i) {
      for (int j = i + 1; j < la; ++j) {
        scratch = ra;
        std::reverse(scratch.begin() + i, scratch.begin() + j + 1);
        const double delta = route_cost(inst, dm, scratch) - s.cost[static_cast<std::size_t>(a)];
        if (delta < best.delta) best = Move{MoveKind::TwoOpt, a, a, i, j, delta};
      }
    }
  }

  for (int a = 0; a < R; ++a) {
    const auto& ra = s.routes[static_cast<std::size_t>(a)];
    const int la = static_cast<int>(ra.size());
    for (int i = 0; i < la; ++i) {
      const int id = ra[static_cast<std::size_t>(i)];
      const double demand = inst.customer(id).demand;
      scratch = ra;
      scratch.erase(scratch.begin() + i);
      const double removed_delta = route_cost(inst, dm, scratch) - s.cost[static_cast<std::size_t>(a)];
      std::vector<int> removed = scratch;
      for (int b = 0; b < R; ++b) {
        if (b == a) continue;
        if (s.load[static_cast<std::size_t>(b)] + demand > cap) continue;
        const auto& rb = s.routes[static_cast<std::size_t>(b)];
        const int lb = static_cast<int>(rb.size());
        for (int j = 0; j <= lb; ++j) {
          scratch = rb;
          scratch.insert(scratch.begin() + j, id);
          const double delta = removed_delta + route_cost(inst, dm, scratch) -
                               s.cost[static_cast<std::size_t>(b)];
          if (delta < best.delta) best = Move{MoveKind::Relocate, a, b, i, j, delta};
        }
      }
    }
  }

  for (int a = 0; a < R; ++a) {
    for (int b = a + 1; b < R; ++b) {
      const auto& ra = s.routes[static_cast<std::size_t>(a)];
      const auto& rb = s.routes[static_cast<std::size_t>(b)];
      for (int i = 0; i < static_cast<int>(ra.size()); ++i) {
        for (int j = 0; j < static_cast<int>(rb.size()); ++j) {
          const int ida = ra[static_cast<std::size_t>(i)];
          const int idb = rb[static_cast<std::size_t>(j)];
          const double da = inst.customer(ida).demand;
          const double db = inst.customer(idb).demand;
          if (s.load[static_cast<std::size_t>(a)] - da + db > cap) continue;
          if (s.load[static_cast<std::size_t>(b)] - db + da > cap) continue;
          scratch = ra;
          scratch[static_cast<std::size_t>(i)] = idb;
          double delta = route_cost(inst, dm, scratch) - s.cost[static_cast<std::size_t>(a)];
          scratch = rb;
          scratch[static_cast<std::size_t>(j)] = ida;
          delta += route_cost(inst, dm, scratch) - s.cost[static_cast<std::size_t>(b)];
          if (delta < best.delta) best = Move{MoveKind::Swap, a, b, i, j, delta};
        }
      }
    }
  }
  return best;
}

inline void apply_move(const Instance& inst, const DistanceMatrix& dm, LsState& s, const Move& mv) {
  auto refresh = [&](int r) {
    s.cost[static_cast<std::size_t>(r)] = route_cost(inst, dm, s.routes[static_cast<std::size_t>(r)]);
    s.load[static_cast<std::size_t>(r)] = route_load(inst, s.routes[static_cast<std::size_t>(r)]);
  };
  switch (mv.kind) {
    case MoveKind::TwoOpt: {
      auto& r = s.routes[static_cast<std::size_t>(mv.a)];
      std::reverse(r.begin() + mv.i, r.begin() + mv.j + 1);
      refresh(mv.a);
      break;
    }
    case MoveKind::Relocate: {
      auto& ra = s.routes[static_cast<std::size_t>(mv.a)];
      const int id = ra[static_cast<std::size_t>(mv.i)];
      ra.erase(ra.begin() + mv.i);
      auto& rb = s.routes[static_cast<std::size_t>(mv.b)];
      rb.insert(rb.begin() + mv.j, id);
      refresh(mv.a);
      refresh(mv.b);
      break;
    }
    case MoveKind::Swap: {
      std::swap(s.routes[static_cast<std::size_t>(mv.a)][static_cast<std::size_t>(mv.i)],
                s.routes[static_cast<std::size_t>(mv.b)][static_cast<std::size_t>(mv.j)]);
      refresh(mv.a);
      refresh(mv.b);
      break;
    }
    case MoveKind::None:
      break;
  }
}

inline void local_search(const Instance& inst, const DistanceMatrix& dm, LsState& s) {
  for (;;) {
    const Move mv = best_improving_move(inst, dm, s);
    if (mv.kind == MoveKind::None) return;
    apply_move(inst, dm, s, mv);
  }
}

// `strength` random capacity-feasible relocates.
inline void perturb(const Instance& inst, const DistanceMatrix& dm, LsState& s, int strength, Rng& rng) {
  const double cap = capacity_slack(inst);
  const int R = static_cast<int>(s.routes.size());
  for (int k = 0; k < strength; ++k) {
    for (int attempt = 0; attempt < 32; ++attempt) {
      const int a = rng.uniform_int(R);
      auto& ra = s.routes[static_cast<std::size_t>(a)];
      if (ra.empty()) continue;
      const int i = rng.uniform_int(static_cast<int>(ra.size()));
      const int b = rng.uniform_int(R);
      if (b == a) continue;
      const int id = ra[static_cast<std::size_t>(i)];
      if (s.load[static_cast<std::size_t>(b)] + inst.customer(id).demand > cap) continue;
      auto& rb = s.routes[static_cast<std::size_t>(b)];
      const int j = rng.uniform_int(static_cast<int>(rb.size()) + 1);
      ra.erase(ra.begin() + i);
      rb.insert(rb.begin() + j, id);
      s.cost[static_cast<std::size_t>(a)] = route_cost(inst, dm, ra);
      s.cost[static_cast<std::size_t>(b)] = route_cost(inst, dm, rb);
      s.load[static_cast<std::size_t>(a)] -= inst.customer(id).demand;
      s.load[static_cast<std::size_t>(b)] += inst.customer(id).demand;
      break;
    }
  }
}

}  // namespace detail

namespace detail {

// Vehicles take turns in fixed cyclic order; each picks its nearest feasible
// unvisited customer. Returns nullopt when some customer ends up fitting no
// vehicle (a bin-packing dead end).
inline std::optional<Routes> nn_round_robin(const Instance& inst, const DistanceMatrix& dm) {
  const int n = inst.n_customers();
  const int m = inst.fleet_size;
  const double cap = capacity_slack(inst);
  Routes routes(static_cast<std::size_t>(m));
  std::vector<double> load(static_cast<std::size_t>(m), 0.0);
  std::vector<int> last(static_cast<std::size_t>(m), 0);
  std::vector<char> active(static_cast<std::size_t>(m), 1);
  std::vector<char> visited(static_cast<std::size_t>(n) + 1, 0);
  int remaining = n;
  int active_count = m;
  int vehicle = 0;
  while (remaining > 0 && active_count > 0) {
    while (!active[static_cast<std::size_t>(vehicle)]) vehicle = (vehicle + 1) % m;
    int pick = -1;
    double pick_dist = std::numeric_limits<double>::infinity();
    for (int id = 1; id <= n; ++id) {
      if (visited[static_cast<std::size_t>(id)]) continue;
      if (load[static_cast<std::size_t>(vehicle)] + inst.customer(id).demand > cap) continue;
      const double dist = dm.at(last[static_cast<std::size_t>(vehicle)], id);
      if (dist < pick_dist) {
        pick_dist = dist;
        pick = id;
      }
    }
    if (pick < 0) {
      active[static_cast<std::size_t>(vehicle)] = 0;
      --active_count;
      continue;
    }
    routes[static_cast<std::size_t>(vehicle)].push_back(pick);
    load[static_cast<std::size_t>(vehicle)] += inst.customer(pick).demand;
    last[static_cast<std::size_t>(vehicle)] = pick;
    visited[static_cast<std::size_t>(pick)] = 1;
    --remaining;
    vehicle = (vehicle + 1) % m;
  }
  if (remaining > 0) return std::nullopt;
  return routes;
}

// Demand-aware repair: customers in decreasing demand order, each appended
// to the roomiest vehicle that fits, then every route ordered by repeated
// nearest-neighbor from the depot.
inline std::optional<Routes> nn_best_fit_decreasing(const Instance& inst, const DistanceMatrix& dm) {
  const int n = inst.n_customers();
  const int m = inst.fleet_size;
  const double cap = capacity_slack(inst);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 1);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double da = inst.customer(a).demand;
    const double db = inst.customer(b).demand;
    return da != db ? da > db : a < b;
  });
  Routes routes(static_cast<std::size_t>(m));
  std::vector<double> load(static_cast<std::size_t>(m), 0.0);
  for (int id : order) {
    const double demand = inst.customer(id).demand;
    int target = -1;
    for (int v = 0; v < m; ++v) {
      if (load[static_cast<std::size_t>(v)] + demand > cap) continue;
      if (target < 0 ||
          load[static_cast<std::size_t>(v)] < load[static_cast<std::size_t>(target)]) {
        target = v;
      }
    }
    if (target < 0) return std::nullopt;
    routes[static_cast<std::size_t>(target)].push_back(id);
    load[static_cast<std::size_t>(target)] += demand;
  }
  for (auto& route : routes) {
    std::vector<int> pool = route;
    route.clear();
    int at = 0;
    while (!pool.empty()) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < pool.size(); ++i) {
        if (dm.at(at, pool[i]) < dm.at(at, pool[best])) best = i;
      }
      at = pool[best];
      route.push_back(at);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
    }
  }
  return routes;
}

}  // namespace detail

// Nearest-feasible-neighbor construction with the vehicles taking turns in
// fixed cyclic order. Falls back to a demand-aware assignment when the
// greedy rotation strands a customer.
inline Routes nearest_neighbor_routes(const Instance& inst, const DistanceMatrix& dm) {
  if (auto routes = detail::nn_round_robin(inst, dm)) return *routes;
  if (auto routes = detail::nn_best_fit_decreasing(inst, dm)) return *routes;
  throw ValidationError("nearest-neighbor construction: no capacity-feasible assignment found");
}

inline Solution nearest_neighbor_solution(const Instance& inst) {
  const DistanceMatrix dm = build_distance_matrix(inst);
  return evaluate_solution(inst, nearest_neighbor_routes(inst, dm));
}

// Giant-tour GA: tournament selection (size 2), order crossover, per-gene
// swap mutation, elitism of one, optimal-split decoding. `history`, when
// given, receives the best cost after every generation.
inline Solution solve_ga(const Instance& inst, const GaConfig& cfg,
                         std::vector<double>* history = nullptr) {
  validate_instance(inst);
  if (cfg.population < 2) throw ConfigError("ga: population must be >= 2");
  if (cfg.max_iters < 1) throw ConfigError("ga: max_iters must be >= 1");
  if (cfg.stall_limit < 1) throw ConfigError("ga: stall_limit must be >= 1");
  if (cfg.crossover_rate < 0.0 || cfg.crossover_rate > 1.0 || cfg.mutation_rate < 0.0 ||
      cfg.mutation_rate > 1.0) {
    throw ConfigError("ga: rates must lie in [0, 1]");
  }

  const DistanceMatrix dm = build_distance_matrix(inst);
  const int n = inst.n_customers();
  Rng rng(cfg.seed);

  struct Individual {
    std::vector<int> perm;
    Routes routes;
    double cost = detail::kInf;
  };

  auto random_perm = [&]() {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 1);
    for (int i = n - 1; i > 0; --i) {
      const int j = rng.uniform_int(i + 1);
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return perm;
  };

  // Decodes a chromosome; infeasible ones are repaired by first-fit and, if
  // that also fails, discarded and resampled.
  auto evaluate = [&](std::vector<int> perm) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      auto routes = detail::split_giant_tour(inst, dm, perm, inst.fleet_size);
      if (!routes) routes = detail::first_fit_split(inst, perm);
      if (routes) {
        Individual ind;
        ind.perm = std::move(perm);
        ind.cost = detail::solution_cost(inst, dm, *routes);
        ind.routes = std::move(*routes);
        return ind;
      }
      perm = random_perm();
    }
    throw ValidationError("ga: could not construct any capacity-feasible split");
  };

  std::vector<Individual> pop;
  pop.reserve(static_cast<std::size_t>(cfg.population));
  {
    // one nearest-neighbor giant tour seeds the population, the rest is random
    const Routes nn = nearest_neighbor_routes(inst, dm);
    std::vector<int> tour;
    for (const auto& route : nn) tour.insert(tour.end(), route.begin(), route.end());
    pop.push_back(evaluate(std::move(tour)));
  }
  for (int i = 1; i < cfg.population; ++i) pop.push_back(evaluate(random_perm()));

  auto best_index = [&]() {
    std::size_t bi = 0;
    for (std::size_t i = 1; i < pop.size(); ++i) {
      if (pop[i].cost < pop[bi].cost) bi = i;
    }
    return bi;
  };

  Individual best = pop[best_index()];
  int stall = 0;
  for (int gen = 0; gen < cfg.max_iters && stall < cfg.stall_limit; ++gen) {
    std::vector<Individual> next;
    next.reserve(pop.size());
    next.push_back(best);  // elitism
    auto tournament = [&]() -> const Individual& {
      const Individual& x = pop[static_cast<std::size_t>(rng.uniform_int(cfg.population))];
      const Individual& y = pop[static_cast<std::size_t>(rng.uniform_int(cfg.population))];
      return x.cost <= y.cost ? x : y;
    };
    while (static_cast<int>(next.size()) < cfg.population) {
      const Individual& p1 = tournament();
      const Individual& p2 = tournament();
      std::vector<int> c1, c2;
      if (rng.uniform() < cfg.crossover_rate) {
        c1 = detail::ox_crossover(p1.perm, p2.perm, rng);
        c2 = detail::ox_crossover(p2.perm, p1.perm, rng);
      } else {
        c1 = p1.perm;
        c2 = p2.perm;
      }
      detail::swap_mutation(c1, cfg.mutation_rate, rng);
      detail::swap_mutation(c2, cfg.mutation_rate, rng);
      next.push_back(evaluate(std::move(c1)));
      if (static_cast<int>(next.size()) < cfg.population) next.push_back(evaluate(std::move(c2)));
    }
    pop = std::move(next);
    const Individual& gen_best = pop[best_index()];
    if (gen_best.cost < best.cost - detail::kImprovementEps) {
      best = gen_best;
      stall = 0;
    } else {
      if (gen_best.cost < best.cost) best = gen_best;
      ++stall;
    }
    if (history) history->push_back(best.cost);
  }
  return evaluate_solution(inst, best.routes);
}

// Iterated local search: nearest-neighbor start, best-improvement descent
// over 2-opt / relocate / swap, random-relocate perturbation, improving
// local optima only.
inline Solution solve_ils(const Instance& inst, const IlsConfig& cfg,
                          std::vector<double>* history = nullptr) {
  validate_instance(inst);
  if (cfg.max_iters < 1) throw ConfigError("ils: max_iters must be >= 1");
  if (cfg.stall_limit < 1) throw ConfigError("ils: stall_limit must be >= 1");
  if (cfg.perturbation_strength < 1) throw ConfigError("ils: perturbation_strength must be >= 1");

  const DistanceMatrix dm = build_distance_matrix(inst);
  Rng rng(cfg.seed);

  detail::LsState best = detail::make_ls_state(inst, dm, nearest_neighbor_routes(inst, dm));
  detail::local_search(inst, dm, best);
  double best_cost = best.total();

  int stall = 0;
  for (int iter = 0; iter < cfg.max_iters && stall < cfg.stall_limit; ++iter) {
    detail::LsState cand = best;
    detail::perturb(inst, dm, cand, cfg.perturbation_strength, rng);
    detail::local_search(inst, dm, cand);
    const double cand_cost = cand.total();
    if (cand_cost < best_cost - detail::kImprovementEps) {
      best = std::move(cand);
      best_cost = cand_cost;
      stall = 0;
    } else {
      if (cand_cost < best_cost) {
        best = std::move(cand);
        best_cost = cand_cost;
      }
      ++stall;
    }
    if (history) history->push_back(best_cost);
  }
  return evaluate_solution(inst, best.routes);
}

}  // namespace routelab::heuristics
