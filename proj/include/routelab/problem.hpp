#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "routelab/common.hpp"

namespace routelab {

// ---------------------------------------------------------------------------
// MVRPSTW environment: instances, routes, the piecewise-linear time-window
// penalty, and the total cost (travel + penalty). Vehicles move at unit
// speed, service takes no time, and a vehicle arriving early departs
// immediately after paying the earliness penalty.
// ---------------------------------------------------------------------------

struct Customer {
  int id = 0;  // 1..N
  Vec2 coord;
  double demand = 0.0;
  double window_open = 0.0;
  double window_close = 0.0;
  double early_coeff = 0.0;
  double late_coeff = 0.0;
};

struct Instance {
  Vec2 depot;
  std::vector<Customer> customers;
  int fleet_size = 1;
  double capacity = 1.0;

  int n_customers() const { return static_cast<int>(customers.size()); }

  const Customer& customer(int id) const { return customers[static_cast<std::size_t>(id - 1)]; }

  double total_demand() const {
    double s = 0.0;
    for (const Customer& c : customers) s += c.demand;
    return s;
  }
};

struct CostBreakdown {
  double travel = 0.0;
  double penalty = 0.0;
  double total = 0.0;

  static CostBreakdown of(double travel, double penalty) {
    return CostBreakdown{travel, penalty, travel + penalty};
  }
};

using Routes = std::vector<std::vector<int>>;

struct Solution {
  Routes routes;                      // exactly fleet_size entries, depot implicit at both ends
  std::vector<double> arrival_times;  // indexed by customer id, slot 0 unused
  CostBreakdown cost;
};

// Penalty for serving `cust` at time `arrival` (arrival >= 0 assumed):
// early_coeff * (open - arrival) before the window, late_coeff * (arrival -
// close) after it, zero inside.
inline double window_penalty(double arrival, const Customer& cust) {
  if (arrival < cust.window_open) return cust.early_coeff * (cust.window_open - arrival);
  if (arrival > cust.window_close) return cust.late_coeff * (arrival - cust.window_close);
  return 0.0;
}

inline void validate_instance(const Instance& inst) {
  if (inst.fleet_size < 1) throw ValidationError("instance: fleet_size must be >= 1");
  if (!(inst.capacity > 0.0)) throw ValidationError("instance: capacity must be positive");
  if (!std::isfinite(inst.depot.x) || !std::isfinite(inst.depot.y)) {
    throw ValidationError("instance: non-finite depot coordinate");
  }
  const int n = inst.n_customers();
  for (int i = 0; i < n; ++i) {
    const Customer& c = inst.customers[static_cast<std::size_t>(i)];
    if (c.id != i + 1) {
      throw ValidationError("instance: customer ids must be 1..N in order, found id " +
                            std::to_string(c.id) + " at position " + std::to_string(i));
    }
    if (!std::isfinite(c.coord.x) || !std::isfinite(c.coord.y)) {
      throw ValidationError("instance: non-finite coordinate for customer " + std::to_string(c.id));
    }
    if (c.demand < 0.0) throw ValidationError("instance: negative demand for customer " + std::to_string(c.id));
    if (c.window_open > c.window_close) {
      throw ValidationError("instance: window_open > window_close for customer " + std::to_string(c.id));
    }
    if (c.window_open < 0.0) throw ValidationError("instance: negative window_open for customer " + std::to_string(c.id));
    if (c.early_coeff < 0.0 || c.late_coeff < 0.0) {
      throw ValidationError("instance: negative penalty coefficient for customer " + std::to_string(c.id));
    }
  }
  const double budget = static_cast<double>(inst.fleet_size) * inst.capacity;
  if (inst.total_demand() > budget * (1.0 + 1e-12)) {
    throw ValidationError("instance: total demand " + std::to_string(inst.total_demand()) +
                          " exceeds fleet budget " + std::to_string(budget));
  }
}

namespace detail {

inline std::string join_ids(const std::vector<int>& ids) {
  std::ostringstream os;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) os << ", ";
    os << ids[i];
  }
  return os.str();
}

}  // namespace detail

// Evaluates a set of routes against an instance. Routes reference customers
// by id; fewer than fleet_size routes are padded with empty ones. Throws
// ValidationError for duplicate/missing/unknown ids and CapacityError when a
// route's running load exceeds the vehicle capacity.
inline Solution evaluate_solution(const Instance& inst, const Routes& routes) {
  const int n = inst.n_customers();
  const int m = inst.fleet_size;
  if (static_cast<int>(routes.size()) > m) {
    throw ValidationError("solution: " + std::to_string(routes.size()) + " routes for a fleet of " +
                          std::to_string(m));
  }

  std::vector<int> seen(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> bad_ids;
  std::vector<int> duplicate_ids;
  for (const auto& route : routes) {
    for (int id : route) {
      if (id < 1 || id > n) {
        bad_ids.push_back(id);
      } else if (++seen[static_cast<std::size_t>(id)] == 2) {
        duplicate_ids.push_back(id);
      }
    }
  }
  if (!bad_ids.empty()) {
    throw ValidationError("solution: unknown customer ids {" + detail::join_ids(bad_ids) + "}");
  }
  if (!duplicate_ids.empty()) {
    throw ValidationError("solution: duplicate customer ids {" + detail::join_ids(duplicate_ids) + "}");
  }
  std::vector<int> missing;
  for (int id = 1; id <= n; ++id) {
    if (seen[static_cast<std::size_t>(id)] == 0) missing.push_back(id);
  }
  if (!missing.empty()) {
    throw ValidationError("solution: missing customer ids {" + detail::join_ids(missing) + "}");
  }

  Solution sol;
  sol.routes = routes;
  sol.routes.resize(static_cast<std::size_t>(m));
  sol.arrival_times.assign(static_cast<std::size_t>(n) + 1, 0.0);

  double travel = 0.0;
  double penalty = 0.0;
  for (std::size_t r = 0; r < sol.routes.size(); ++r) {
    const auto& route = sol.routes[r];
    double load = 0.0;
    double clock = 0.0;
    Vec2 pos = inst.depot;
    for (std::size_t k = 0; k < route.size(); ++k) {
      const Customer& c = inst.customer(route[k]);
      load += c.demand;
      if (load > inst.capacity * (1.0 + 1e-12)) {
        std::vector<int> prefix(route.begin(), route.begin() + static_cast<std::ptrdiff_t>(k) + 1);
        throw CapacityError("solution: route " + std::to_string(r + 1) + " exceeds capacity " +
                            std::to_string(inst.capacity) + " after prefix [" +
                            detail::join_ids(prefix) + "] (load " + std::to_string(load) + ")");
      }
      const double leg = euclidean_distance(pos, c.coord);
      travel += leg;
      clock += leg;
      sol.arrival_times[static_cast<std::size_t>(c.id)] = clock;
      penalty += window_penalty(clock, c);
      pos = c.coord;
    }
    if (!route.empty()) travel += euclidean_distance(pos, inst.depot);
  }
  sol.cost = CostBreakdown::of(travel, penalty);
  return sol;
}

inline double reward(const Solution& sol) { return -sol.cost.total; }

// Appends target_n - N zero-demand clones of customer 1 (same location,
// window, and penalty coefficients), so an instance matches the customer
// count a trained model expects.
inline Instance pad_virtual_customers(const Instance& inst, int target_n) {
  const int n = inst.n_customers();
  if (n < 1) throw InvalidArgumentError("pad_virtual_customers: instance has no customers");
  if (target_n < n) {
    throw InvalidArgumentError("pad_virtual_customers: target " + std::to_string(target_n) +
                               " below customer count " + std::to_string(n));
  }
  Instance out = inst;
  const Customer& proto = inst.customers.front();
  for (int id = n + 1; id <= target_n; ++id) {
    Customer v = proto;
    v.id = id;
    v.demand = 0.0;
    out.customers.push_back(v);
  }
  return out;
}

// Rescales the vehicle capacity by `factor` and every demand with it, so
// demand/capacity ratios (and hence all route costs and feasibility) are
// unchanged.
inline Instance scale_capacity(const Instance& inst, double factor) {
  if (!(factor > 0.0)) throw InvalidArgumentError("scale_capacity: factor must be positive");
  Instance out = inst;
  out.capacity = inst.capacity * factor;
  for (Customer& c : out.customers) c.demand *= factor;
  return out;
}

}  // namespace routelab
