#pragma once

#include "gridthreat/attack_synthesis.hpp"
#include "gridthreat/grid_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gridthreat {

enum class SecuringPolicy { None, Random, Analytical };

struct SecuringSpec {
  SecuringPolicy policy = SecuringPolicy::None;
  double fraction = 0.0;  // Random: share of taken measurements
  int count = -1;         // Random: exact count, overrides fraction when >= 0
  int top_k = 1;          // Analytical: buses to secure
  std::uint64_t seed = 1;

  std::string label() const;
};

struct SweepSpec {
  std::vector<double> delta_b;
  std::vector<double> delta_l;
  std::vector<double> line_fraction;
  std::vector<int> max_buses;
  std::vector<SecuringSpec> securing{SecuringSpec{}};
  int repetitions = 1;  // Random policies only; seed advances per repetition
  int workers = 1;
};

struct SweepCell {
  double delta_b = 0.0;
  double delta_l = 0.0;
  double line_fraction = 0.0;
  int max_buses = 0;
  std::string policy;
  std::uint64_t seed = 0;
  int repetition = 0;
  int secured = 0;
  long long attack_space = 0;
  std::string error;
};

struct SweepResult {
  int num_buses = 0;
  int num_lines = 0;
  std::vector<SweepCell> cells;
  std::vector<long long> bus_frequency;  // summed over cells
  std::map<int, Eigen::MatrixXi> heatmaps;  // keyed by T_B, (outage, line)
};

/// Marks measurements secured according to `spec`. Analytical securing
/// uses `ranking` (bus ids, most frequent first).
GridCase apply_securing(const GridCase& grid, const SecuringSpec& spec,
                        const std::vector<int>& ranking, int* secured_count = nullptr);

SweepResult run_sweep(const GridCase& grid, const SweepSpec& spec);

/// Bus ids by descending count, ties by id; buses never hit are left out.
std::vector<int> rank_buses_by_frequency(const std::vector<long long>& frequency);
std::vector<int> rank_buses_by_frequency(const std::vector<AttackVector>& vectors);

/// attack_space.csv, bus_frequency.csv, heatmap_TB<k>.csv.
void write_sweep_outputs(const SweepResult& result, const std::filesystem::path& dir);

}  // namespace gridthreat
