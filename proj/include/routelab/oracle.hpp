#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "routelab/problem.hpp"

namespace routelab::oracle {

// ---------------------------------------------------------------------------
// Exact solver for tiny instances. Vehicles are interchangeable, so the
// search enumerates unordered partitions of the customers into at most M
// capacity-feasible groups (each group created in order of its smallest
// member), and for each group the best visiting order by lexicographic DFS
// over permutations. Per-route costs are memoized by customer subset.
//
// The cost arithmetic here is deliberately written independently of
// problem_core's evaluate_solution so the two can cross-check each other.
// ---------------------------------------------------------------------------

struct OracleResult {
  Solution best;
  double optimal_cost = std::numeric_limits<double>::infinity();
  std::uint64_t nodes_explored = 0;
};

class NodeLimitError : public Error {
 public:
  NodeLimitError(std::string what, OracleResult incumbent, bool has_incumbent)
      : Error(std::move(what)), incumbent_(std::move(incumbent)), has_incumbent_(has_incumbent) {}

  const OracleResult& incumbent() const { return incumbent_; }
  bool has_incumbent() const { return has_incumbent_; }

 private:
  OracleResult incumbent_;
  bool has_incumbent_;
};

inline constexpr int kMaxOracleCustomers = 9;

namespace detail {

inline double point_distance(const Vec2& a, const Vec2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// Travel + penalty of one depot-to-depot route, accumulated per route.
inline void route_cost_parts(const Instance& inst, const std::vector<int>& route, double& travel,
                             double& penalty) {
  travel = 0.0;
  penalty = 0.0;
  if (route.empty()) return;
  Vec2 pos = inst.depot;
  double clock = 0.0;
  for (int id : route) {
    const Customer& c = inst.customer(id);
    const double leg = point_distance(pos, c.coord);
    travel += leg;
    clock += leg;
    if (clock < c.window_open) {
      penalty += c.early_coeff * (c.window_open - clock);
    } else if (clock > c.window_close) {
      penalty += c.late_coeff * (clock - c.window_close);
    }
    pos = c.coord;
  }
  travel += point_distance(pos, inst.depot);
}

struct RouteBest {
  bool computed = false;
  double cost = std::numeric_limits<double>::infinity();
  std::vector<int> order;
};

class Search {
 public:
  Search(const Instance& inst, std::uint64_t node_limit)
      : inst_(inst), node_limit_(node_limit), n_(inst.n_customers()) {
    route_memo_.resize(std::size_t{1} << n_);
    subset_demand_.assign(std::size_t{1} << n_, 0.0);
    for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << n_); ++mask) {
      const int low = std::countr_zero(mask);
      subset_demand_[mask] = subset_demand_[mask & (mask - 1)] +
                             inst.customer(low + 1).demand;
    }
  }

  OracleResult run() {
    std::vector<std::uint32_t> groups;
    assign_customer(0, groups);
    OracleResult result;
    result.nodes_explored = nodes_;
    if (!has_best_) {
      // M >= 1 and an empty customer set still yields the empty solution.
      best_routes_.clear();
      has_best_ = true;
    }
    result.best = evaluate_solution(inst_, padded(best_routes_));
    result.optimal_cost = result.best.cost.total;
    return result;
  }

 private:
  void count_node() {
    if (++nodes_ > node_limit_) {
      OracleResult incumbent;
      incumbent.nodes_explored = nodes_;
      if (has_best_) {
        incumbent.best = evaluate_solution(inst_, padded(best_routes_));
        incumbent.optimal_cost = incumbent.best.cost.total;
      }
      throw NodeLimitError("oracle: node limit " + std::to_string(node_limit_) + " exhausted",
                           std::move(incumbent), has_best_);
    }
  }

  Routes padded(Routes routes) const {
    routes.resize(static_cast<std::size_t>(inst_.fleet_size));
    return routes;
  }

  // Partition phase: customer ids assigned in ascending order, each joining
  // an existing group or (when fewer than M exist) opening a new one.
  void assign_customer(int index, std::vector<std::uint32_t>& groups) {
    if (index == n_) {
      finish_partition(groups);
      return;
    }
    const std::uint32_t bit = std::uint32_t{1} << index;
    const double demand = inst_.customer(index + 1).demand;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (subset_demand_[groups[g]] + demand > inst_.capacity) continue;  // prune overload
      count_node();
      groups[g] |= bit;
      assign_customer(index + 1, groups);
      groups[g] &= ~bit;
    }
    if (static_cast<int>(groups.size()) < inst_.fleet_size && demand <= inst_.capacity) {
      count_node();
      groups.push_back(bit);
      assign_customer(index + 1, groups);
      groups.pop_back();
    }
  }

  void finish_partition(const std::vector<std::uint32_t>& groups) {
    double cost = 0.0;
    Routes routes;
    routes.reserve(groups.size());
    for (std::uint32_t mask : groups) {
      const RouteBest& rb = best_route(mask);
      cost += rb.cost;
      routes.push_back(rb.order);
    }
    canonicalize(routes);
    if (!has_best_ || cost < best_cost_ || (cost == best_cost_ && routes < best_routes_)) {
      has_best_ = true;
      best_cost_ = cost;
      best_routes_ = std::move(routes);
    }
  }

  static void canonicalize(Routes& routes) { std::sort(routes.begin(), routes.end()); }

  const RouteBest& best_route(std::uint32_t mask) {
    RouteBest& rb = route_memo_[mask];
    if (rb.computed) return rb;
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(std::popcount(mask)));
    order_dfs(mask, inst_.depot, 0.0, 0.0, 0.0, order, rb);
    rb.computed = true;
    return rb;
  }

  // Lexicographic DFS over visiting orders; the first optimum found is the
  // lexicographically smallest one. Prefix travel + accrued penalty is a
  // valid lower bound on the completed route cost, so it prunes safely.
  void order_dfs(std::uint32_t remaining, const Vec2& pos, double clock, double travel,
                 double penalty, std::vector<int>& order, RouteBest& rb) {
    if (remaining == 0) {
      const double total = travel + point_distance(pos, inst_.depot) + penalty;
      if (total < rb.cost) {
        rb.cost = total;
        rb.order = order;
      }
      return;
    }
    if (travel + penalty >= rb.cost) return;
    for (std::uint32_t rest = remaining; rest != 0; rest &= rest - 1) {
      const int index = std::countr_zero(rest);
      count_node();
      const Customer& c = inst_.customer(index + 1);
      const double leg = point_distance(pos, c.coord);
      const double arrive = clock + leg;
      double pen = 0.0;
      if (arrive < c.window_open) {
        pen = c.early_coeff * (c.window_open - arrive);
      } else if (arrive > c.window_close) {
        pen = c.late_coeff * (arrive - c.window_close);
      }
      order.push_back(c.id);
      order_dfs(remaining & ~(std::uint32_t{1} << index), c.coord, arrive, travel + leg,
                penalty + pen, order, rb);
      order.pop_back();
    }
  }

  const Instance& inst_;
  std::uint64_t node_limit_;
  int n_;
  std::uint64_t nodes_ = 0;
  std::vector<RouteBest> route_memo_;
  std::vector<double> subset_demand_;
  bool has_best_ = false;
  double best_cost_ = std::numeric_limits<double>::infinity();
  Routes best_routes_;
};

}  // namespace detail

// Independent re-evaluation of a route set, for cross-checking
// problem_core's evaluate_solution. Performs the same validations implicitly
// by construction (callers pass validated routes).
inline CostBreakdown evaluate_routes(const Instance& inst, const Routes& routes) {
  double travel_sum = 0.0;
  double penalty_sum = 0.0;
  for (const auto& route : routes) {
    double travel = 0.0;
    double penalty = 0.0;
    detail::route_cost_parts(inst, route, travel, penalty);
    travel_sum += travel;
    penalty_sum += penalty;
  }
  return CostBreakdown::of(travel_sum, penalty_sum);
}

inline OracleResult solve_exact(const Instance& inst,
                                std::uint64_t node_limit = std::numeric_limits<std::uint64_t>::max()) {
  validate_instance(inst);
  if (inst.n_customers() > kMaxOracleCustomers) {
    throw InvalidArgumentError("oracle: instance has " + std::to_string(inst.n_customers()) +
                               " customers, exact search is capped at " +
                               std::to_string(kMaxOracleCustomers));
  }
  if (node_limit == 0) throw InvalidArgumentError("oracle: node_limit must be positive");
  detail::Search search(inst, node_limit);
  return search.run();
}

}  // namespace routelab::oracle
