#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "routelab/problem.hpp"

namespace routelab {

// ---------------------------------------------------------------------------
// Seeded instance sampling. Coordinates are uniform in a square, demands
// uniform in (0, demand_max], windows either two ordered uniform draws from
// [0, horizon] or fixed-length with a uniform start. Instances whose total
// demand exceeds the fleet budget M*Q are rejected and resampled, so every
// emitted instance is feasible.
// ---------------------------------------------------------------------------

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool degenerate() const { return lo == hi; }
};

struct GenConfig {
  int n_customers = 20;
  int fleet_size = 2;
  double capacity = 60.0;
  double coord_box = 10.0;
  double window_horizon = 10.0;
  std::optional<double> window_length;  // set -> fixed-length windows
  double demand_max = 10.0;
  Interval alpha_range{0.0, 0.2};
  Interval beta_range{0.0, 1.0};
  std::uint64_t seed = 0;
};

inline void validate_gen_config(const GenConfig& cfg) {
  if (cfg.n_customers < 1) throw ConfigError("gen: n_customers must be >= 1");
  if (cfg.fleet_size < 1) throw ConfigError("gen: fleet_size must be >= 1");
  if (!(cfg.capacity > 0.0)) throw ConfigError("gen: capacity must be positive");
  if (!(cfg.demand_max > 0.0)) throw ConfigError("gen: demand_max must be positive");
  if (!(cfg.coord_box > 0.0)) throw ConfigError("gen: coord_box must be positive");
  if (cfg.window_horizon < 0.0) throw ConfigError("gen: window_horizon must be >= 0");
  if (cfg.window_length && (*cfg.window_length < 0.0 || *cfg.window_length > cfg.window_horizon)) {
    throw ConfigError("gen: window_length must lie in [0, horizon]");
  }
  if (cfg.alpha_range.lo > cfg.alpha_range.hi || cfg.beta_range.lo > cfg.beta_range.hi) {
    throw ConfigError("gen: penalty coefficient range is inverted");
  }
  if (cfg.alpha_range.lo < 0.0 || cfg.beta_range.lo < 0.0) {
    throw ConfigError("gen: penalty coefficients must be nonnegative");
  }
}

// The named experiment scales. 20/50/100/150-customer presets follow the
// published distributions; 6C-2V and 10C-2V are desk-scale additions drawn
// from the 20C-2V feature distributions (small enough for the exact oracle
// and for fast training runs).
inline std::vector<std::string> preset_names() {
  return {"6C-2V",   "10C-2V",  "20C-2V",  "20C-3V",  "50C-2V",  "50C-3V",  "50C-4V",
          "50C-5V",  "100C-2V", "100C-3V", "100C-4V", "100C-5V", "150C-5V"};
}

inline GenConfig preset_config(std::string_view name) {
  GenConfig cfg;
  auto small = [&](int n, int m, double dmax) {
    cfg.n_customers = n;
    cfg.fleet_size = m;
    cfg.capacity = 60.0;
    cfg.window_horizon = 10.0;
    cfg.demand_max = dmax;
  };
  auto medium = [&](int m, double dmax) {
    cfg.n_customers = 50;
    cfg.fleet_size = m;
    cfg.capacity = 150.0;
    cfg.window_horizon = 20.0;
    cfg.demand_max = dmax;
  };
  auto large = [&](int m, double dmax) {
    cfg.n_customers = 100;
    cfg.fleet_size = m;
    cfg.capacity = 300.0;
    cfg.window_horizon = 40.0;
    cfg.demand_max = dmax;
  };
  if (name == "6C-2V") {
    small(6, 2, 10.0);
  } else if (name == "10C-2V") {
    small(10, 2, 10.0);
  } else if (name == "20C-2V") {
    small(20, 2, 10.0);
  } else if (name == "20C-3V") {
    small(20, 3, 15.0);
  } else if (name == "50C-2V") {
    medium(2, 10.0);
  } else if (name == "50C-3V") {
    medium(3, 15.0);
  } else if (name == "50C-4V") {
    medium(4, 20.0);
  } else if (name == "50C-5V") {
    medium(5, 25.0);
  } else if (name == "100C-2V") {
    large(2, 10.0);
  } else if (name == "100C-3V") {
    large(3, 15.0);
  } else if (name == "100C-4V") {
    large(4, 20.0);
  } else if (name == "100C-5V") {
    large(5, 25.0);
  } else if (name == "150C-5V") {
    cfg.n_customers = 150;
    cfg.fleet_size = 5;
    cfg.capacity = 180.0;
    cfg.window_horizon = 60.0;
    cfg.window_length = 20.0;
    cfg.demand_max = 10.0;
    cfg.alpha_range = {0.1, 0.1};
    cfg.beta_range = {0.5, 0.5};
  } else {
    throw ConfigError("unknown preset \"" + std::string(name) + "\"");
  }
  return cfg;
}

namespace detail {

inline Instance sample_instance(const GenConfig& cfg, Rng& rng) {
  Instance inst;
  inst.fleet_size = cfg.fleet_size;
  inst.capacity = cfg.capacity;
  inst.depot = {rng.uniform(0.0, cfg.coord_box), rng.uniform(0.0, cfg.coord_box)};
  inst.customers.reserve(static_cast<std::size_t>(cfg.n_customers));
  for (int i = 1; i <= cfg.n_customers; ++i) {
    Customer c;
    c.id = i;
    c.coord = {rng.uniform(0.0, cfg.coord_box), rng.uniform(0.0, cfg.coord_box)};
    // (0, demand_max]; exact zero is reserved for virtual customers.
    c.demand = cfg.demand_max * (1.0 - rng.uniform());
    if (cfg.window_length) {
      c.window_open = rng.uniform(0.0, cfg.window_horizon - *cfg.window_length);
      c.window_close = c.window_open + *cfg.window_length;
    } else {
      const double a = rng.uniform(0.0, cfg.window_horizon);
      const double b = rng.uniform(0.0, cfg.window_horizon);
      c.window_open = std::min(a, b);
      c.window_close = std::max(a, b);
    }
    c.early_coeff = cfg.alpha_range.degenerate() ? cfg.alpha_range.lo
                                                 : rng.uniform(cfg.alpha_range.lo, cfg.alpha_range.hi);
    c.late_coeff = cfg.beta_range.degenerate() ? cfg.beta_range.lo
                                               : rng.uniform(cfg.beta_range.lo, cfg.beta_range.hi);
    inst.customers.push_back(c);
  }
  return inst;
}

}  // namespace detail

// Draws `count` instances. Identical (cfg, count) always produces identical
// output; each instance owns its own derived RNG stream, so prefixes are
// stable when count grows.
inline std::vector<Instance> generate(const GenConfig& cfg, int count,
                                      std::uint64_t retry_budget = 1000000) {
  validate_gen_config(cfg);
  if (count < 0) throw ConfigError("gen: count must be >= 0");
  std::vector<Instance> out;
  out.reserve(static_cast<std::size_t>(count));
  const double budget = static_cast<double>(cfg.fleet_size) * cfg.capacity;
  std::uint64_t resamples = 0;
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    for (;;) {
      Instance inst = detail::sample_instance(cfg, rng);
      if (inst.total_demand() <= budget) {
        validate_instance(inst);
        out.push_back(std::move(inst));
        break;
      }
      if (++resamples > retry_budget) {
        throw GenerationError("gen: feasibility rejection exhausted " +
                              std::to_string(retry_budget) + " resamples");
      }
    }
  }
  return out;
}

}  // namespace routelab
