#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "routelab/instance_gen.hpp"
#include "routelab/problem.hpp"

namespace testutil {

inline routelab::Customer make_customer(int id, double x, double y, double demand = 1.0,
                                        double e = 0.0, double l = 100.0, double alpha = 0.0,
                                        double beta = 0.0) {
  return routelab::Customer{id, {x, y}, demand, e, l, alpha, beta};
}

inline routelab::Instance make_instance(routelab::Vec2 depot,
                                        std::vector<routelab::Customer> customers, int fleet_size,
                                        double capacity) {
  routelab::Instance inst;
  inst.depot = depot;
  inst.customers = std::move(customers);
  inst.fleet_size = fleet_size;
  inst.capacity = capacity;
  return inst;
}

// Random valid routes for an instance: a shuffled permutation chopped into
// fleet_size pieces, ignoring capacity (pass care_capacity to respect it).
inline routelab::Routes random_routes(const routelab::Instance& inst, routelab::Rng& rng) {
  const int n = inst.n_customers();
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i + 1;
  for (int i = n - 1; i > 0; --i) {
    const int j = rng.uniform_int(i + 1);
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  routelab::Routes routes(static_cast<std::size_t>(inst.fleet_size));
  for (int i = 0; i < n; ++i) {
    routes[static_cast<std::size_t>(rng.uniform_int(inst.fleet_size))].push_back(
        perm[static_cast<std::size_t>(i)]);
  }
  return routes;
}

// Capacity-respecting random routes (randomized fill in shuffled order,
// retried until feasible).
inline routelab::Routes random_feasible_routes(const routelab::Instance& inst, routelab::Rng& rng) {
  const int n = inst.n_customers();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i + 1;
    for (int i = n - 1; i > 0; --i) {
      const int j = rng.uniform_int(i + 1);
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    routelab::Routes routes(static_cast<std::size_t>(inst.fleet_size));
    std::vector<double> load(static_cast<std::size_t>(inst.fleet_size), 0.0);
    bool ok = true;
    for (int id : perm) {
      const double d = inst.customer(id).demand;
      int pick = -1;
      const int start = rng.uniform_int(inst.fleet_size);
      for (int off = 0; off < inst.fleet_size; ++off) {
        const int v = (start + off) % inst.fleet_size;
        if (load[static_cast<std::size_t>(v)] + d <= inst.capacity) {
          pick = v;
          break;
        }
      }
      if (pick < 0) {
        ok = false;
        break;
      }
      routes[static_cast<std::size_t>(pick)].push_back(id);
      load[static_cast<std::size_t>(pick)] += d;
    }
    if (ok) return routes;
  }
  throw std::runtime_error("random_feasible_routes: no feasible fill found");
}

class TempDir {
 public:
  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0; attempt < 1000; ++attempt) {
      auto candidate = base / ("routelab_test_" + std::to_string(std::rand()) + "_" +
                               std::to_string(attempt));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create temp dir");
  }

  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
