#include "gridthreat/attack_io.hpp"

#include "gridthreat/error.hpp"

#include <json.hpp>

namespace gridthreat {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json ids(const std::vector<bool>& flags) {
  json a = json::array();
  for (size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) a.push_back(static_cast<int>(i) + 1);
  }
  return a;
}

Eigen::VectorXd read_vec(const json& j, const char* field, int size) {
  if (!j.contains(field) || !j[field].is_array()) {
    throw Error(std::string("attack file lacks array '") + field + "'");
  }
  const json& a = j[field];
  if (static_cast<int>(a.size()) != size) {
    throw Error(std::string("attack field '") + field + "' has " + std::to_string(a.size()) +
                " entries, expected " + std::to_string(size));
  }
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v[i] = a[i].get<double>();
  return v;
}

std::vector<bool> read_ids(const json& j, const char* field, int size) {
  std::vector<bool> flags(size, false);
  if (!j.contains(field)) return flags;
  for (const auto& x : j[field]) {
    const int id = x.get<int>();
    if (id < 1 || id > size) {
      throw Error(std::string("attack field '") + field + "' has out-of-range id " +
                  std::to_string(id));
    }
    flags[id - 1] = true;
  }
  return flags;
}

}  // namespace

std::string attack_to_json(const GridCase& grid, const AttackVector& v) {
  (void)grid;
  json j;
  j["attacked_subset"] = v.attacked_subset;
  j["delta_theta"] = vec(v.delta_theta);
  j["delta_line"] = vec(v.delta_line);
  j["delta_bus"] = vec(v.delta_bus);
  j["altered_measurements"] = ids(v.altered);
  j["corrupted_states"] = ids(v.corrupted);
  j["compromised_buses"] = ids(v.compromised);
  j["attacked_load"] = vec(v.attacked_load);
  j["corrupted_dispatch"] = vec(v.corrupted_dispatch);
  j["corrupted_cost"] = v.corrupted_cost;
  json pairs = json::array();
  for (const auto& p : v.overload_pairs) {
    pairs.push_back({{"line", p.line}, {"outage", p.outage}, {"flow", p.flow},
                     {"capacity", p.capacity}});
  }
  j["overload_pairs"] = pairs;
  json targets = json::array();
  for (size_t i = 0; i < v.targets.size(); ++i) {
    const int sign = i < v.target_signs.size() ? v.target_signs[i] : 1;
    targets.push_back({{"line", v.targets[i].first}, {"outage", v.targets[i].second},
                       {"sign", sign}});
  }
  j["targets"] = targets;
  return j.dump(2) + "\n";
}

AttackVector attack_from_json(const GridCase& grid, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("attack file is not valid JSON: ") + e.what());
  }
  const int b = grid.num_buses();
  const int l = grid.num_lines();
  AttackVector v;
  try {
    if (j.contains("attacked_subset")) v.attacked_subset = j["attacked_subset"].get<std::vector<int>>();
    v.delta_theta = read_vec(j, "delta_theta", b);
    v.delta_line = read_vec(j, "delta_line", l);
    v.delta_bus = read_vec(j, "delta_bus", b);
    v.attacked_load = read_vec(j, "attacked_load", b);
    v.corrupted_dispatch = read_vec(j, "corrupted_dispatch", b);
    v.altered = read_ids(j, "altered_measurements", grid.num_measurements());
    v.corrupted = read_ids(j, "corrupted_states", b);
    v.compromised = read_ids(j, "compromised_buses", b);
    v.corrupted_cost = j.value("corrupted_cost", 0.0);
    if (j.contains("overload_pairs")) {
      for (const auto& p : j["overload_pairs"]) {
        v.overload_pairs.push_back({p.at("line").get<int>(), p.at("outage").get<int>(),
                                    p.at("flow").get<double>(), p.at("capacity").get<double>()});
      }
    }
    if (j.contains("targets")) {
      for (const auto& t : j["targets"]) {
        v.targets.emplace_back(t.at("line").get<int>(), t.at("outage").get<int>());
        v.target_signs.push_back(t.value("sign", 1));
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed attack file: ") + e.what());
  }
  return v;
}

}  // namespace gridthreat
