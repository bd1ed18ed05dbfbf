#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "routelab/problem.hpp"

namespace routelab {

// ---------------------------------------------------------------------------
// On-disk formats: one JSON record per line.
//
// Instance: {"depot":[x,y],"capacity":Q,"fleet_size":M,
//            "customers":[{"id":..,"x":..,"y":..,"demand":..,"e":..,"l":..,
//                          "alpha":..,"beta":..}, ...]}
// Solution: {"routes":[[ids]...],"travel":t,"penalty":p,"total":c}
//
// Readers reject unknown fields.
// ---------------------------------------------------------------------------

using json = nlohmann::ordered_json;

namespace detail {

inline void expect_fields(const json& obj, std::initializer_list<const char*> allowed,
                          std::size_t line, const char* what) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* name : allowed) {
      if (item.key() == name) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ParseError(line, std::string(what) + ": unknown field \"" + item.key() + "\"");
    }
  }
  for (const char* name : allowed) {
    if (!obj.contains(name)) {
      throw ParseError(line, std::string(what) + ": missing field \"" + name + "\"");
    }
  }
}

inline double as_number(const json& v, std::size_t line, const char* what) {
  if (!v.is_number()) throw ParseError(line, std::string(what) + ": expected a number");
  return v.get<double>();
}

}  // namespace detail

inline json instance_to_json(const Instance& inst) {
  json rec;
  rec["depot"] = {inst.depot.x, inst.depot.y};
  rec["capacity"] = inst.capacity;
  rec["fleet_size"] = inst.fleet_size;
  json customers = json::array();
  for (const Customer& c : inst.customers) {
    json jc;
    jc["id"] = c.id;
    jc["x"] = c.coord.x;
    jc["y"] = c.coord.y;
    jc["demand"] = c.demand;
    jc["e"] = c.window_open;
    jc["l"] = c.window_close;
    jc["alpha"] = c.early_coeff;
    jc["beta"] = c.late_coeff;
    customers.push_back(std::move(jc));
  }
  rec["customers"] = std::move(customers);
  return rec;
}

inline Instance instance_from_json(const json& rec, std::size_t line = 0) {
  if (!rec.is_object()) throw ParseError(line, "instance: expected an object");
  detail::expect_fields(rec, {"depot", "capacity", "fleet_size", "customers"}, line, "instance");
  Instance inst;
  const json& depot = rec["depot"];
  if (!depot.is_array() || depot.size() != 2) {
    throw ParseError(line, "instance: depot must be [x, y]");
  }
  inst.depot = {detail::as_number(depot[0], line, "depot"), detail::as_number(depot[1], line, "depot")};
  inst.capacity = detail::as_number(rec["capacity"], line, "capacity");
  if (!rec["fleet_size"].is_number_integer()) throw ParseError(line, "instance: fleet_size must be an integer");
  inst.fleet_size = rec["fleet_size"].get<int>();
  const json& customers = rec["customers"];
  if (!customers.is_array()) throw ParseError(line, "instance: customers must be an array");
  for (const json& jc : customers) {
    if (!jc.is_object()) throw ParseError(line, "customer: expected an object");
    detail::expect_fields(jc, {"id", "x", "y", "demand", "e", "l", "alpha", "beta"}, line, "customer");
    Customer c;
    if (!jc["id"].is_number_integer()) throw ParseError(line, "customer: id must be an integer");
    c.id = jc["id"].get<int>();
    c.coord = {detail::as_number(jc["x"], line, "x"), detail::as_number(jc["y"], line, "y")};
    c.demand = detail::as_number(jc["demand"], line, "demand");
    c.window_open = detail::as_number(jc["e"], line, "e");
    c.window_close = detail::as_number(jc["l"], line, "l");
    c.early_coeff = detail::as_number(jc["alpha"], line, "alpha");
    c.late_coeff = detail::as_number(jc["beta"], line, "beta");
    inst.customers.push_back(c);
  }
  try {
    validate_instance(inst);
  } catch (const ValidationError& e) {
    throw ParseError(line, e.what());
  }
  return inst;
}

inline std::string instances_to_string(const std::vector<Instance>& list) {
  std::string out;
  for (const Instance& inst : list) {
    out += instance_to_json(inst).dump();
    out += '\n';
  }
  return out;
}

inline void write_instances(const std::string& path, const std::vector<Instance>& list) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open for writing: " + path);
  os << instances_to_string(list);
  if (!os) throw Error("write failed: " + path);
}

inline std::vector<Instance> read_instances_stream(std::istream& is) {
  std::vector<Instance> out;
  std::string linebuf;
  std::size_t lineno = 0;
  while (std::getline(is, linebuf)) {
    ++lineno;
    if (linebuf.empty()) continue;
    json rec;
    try {
      rec = json::parse(linebuf);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, std::string("malformed record: ") + e.what());
    }
    out.push_back(instance_from_json(rec, lineno));
  }
  return out;
}

inline std::vector<Instance> read_instances(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open: " + path);
  return read_instances_stream(is);
}

inline json solution_to_json(const Solution& sol) {
  json rec;
  rec["routes"] = sol.routes;
  rec["travel"] = sol.cost.travel;
  rec["penalty"] = sol.cost.penalty;
  rec["total"] = sol.cost.total;
  return rec;
}

// Parsed solution record; arrival times are recomputed on demand via
// evaluate_solution against the matching instance.
struct SolutionRecord {
  Routes routes;
  CostBreakdown cost;
};

inline SolutionRecord solution_from_json(const json& rec, std::size_t line = 0) {
  if (!rec.is_object()) throw ParseError(line, "solution: expected an object");
  detail::expect_fields(rec, {"routes", "travel", "penalty", "total"}, line, "solution");
  SolutionRecord out;
  const json& routes = rec["routes"];
  if (!routes.is_array()) throw ParseError(line, "solution: routes must be an array");
  for (const json& jr : routes) {
    if (!jr.is_array()) throw ParseError(line, "solution: each route must be an array of ids");
    std::vector<int> route;
    for (const json& v : jr) {
      if (!v.is_number_integer()) throw ParseError(line, "solution: customer ids must be integers");
      route.push_back(v.get<int>());
    }
    out.routes.push_back(std::move(route));
  }
  out.cost.travel = detail::as_number(rec["travel"], line, "travel");
  out.cost.penalty = detail::as_number(rec["penalty"], line, "penalty");
  out.cost.total = detail::as_number(rec["total"], line, "total");
  return out;
}

inline void write_solutions(const std::string& path, const std::vector<Solution>& list) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open for writing: " + path);
  for (const Solution& sol : list) {
    os << solution_to_json(sol).dump() << '\n';
  }
  if (!os) throw Error("write failed: " + path);
}

inline std::vector<SolutionRecord> read_solutions(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open: " + path);
  std::vector<SolutionRecord> out;
  std::string linebuf;
  std::size_t lineno = 0;
  while (std::getline(is, linebuf)) {
    ++lineno;
    if (linebuf.empty()) continue;
    json rec;
    try {
      rec = json::parse(linebuf);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, std::string("malformed record: ") + e.what());
    }
    out.push_back(solution_from_json(rec, lineno));
  }
  return out;
}

// Content hash of an instance set, used by experiment reports to prove all
// methods consumed identical inputs.
inline std::string instances_content_hash(const std::vector<Instance>& list) {
  const std::string bytes = instances_to_string(list);
  const std::uint64_t h = fnv1a64(bytes.data(), bytes.size());
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace routelab
