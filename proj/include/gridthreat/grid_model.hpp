#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridthreat {

// Identifiers in the data model are the 1-based ids used in case files.
// Vectors and matrices produced by the numerical modules are 0-based:
// bus j lives at index j-1, line i at index i-1.

struct Bus {
  int id = 0;
  bool is_generator = false;
  bool is_load = false;
  bool operator==(const Bus&) const = default;
};

/// Lossless transmission line. `admittance` is 1/reactance in pu.
struct Line {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double admittance = 0.0;
  double capacity = 0.0;  // pu on 100 MVA base
  bool operator==(const Line&) const = default;
};

/// Linear cost generator: cost = alpha + beta * P whenever P > 0.
struct Generator {
  int bus = 0;
  double p_max = 0.0;
  double p_min = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  bool operator==(const Generator&) const = default;
};

struct LoadSpec {
  int bus = 0;
  double current = 0.0;
  double max = 0.0;
  double min = 0.0;
  bool operator==(const LoadSpec&) const = default;
};

/// Indices 1..l are forward line flows, l+1..2l backward flows,
/// 2l+1..2l+b bus consumptions.
struct MeasurementConfig {
  int index = 0;
  bool taken = true;
  bool secured = false;
  bool accessible = true;
  bool operator==(const MeasurementConfig&) const = default;
};

struct AttackerLimits {
  int max_measurements = 0;
  int max_buses = 0;
  double delta_b = 0.0;               // fraction of the original load
  double delta_l = 0.0;               // fraction of rated capacity
  double target_line_fraction = 0.0;  // T_L = ceil(fraction * l)
  double cost_budget = -1.0;          // dollars; negative = use pre-attack SCOPF cost
  bool operator==(const AttackerLimits&) const = default;

  int target_lines(int num_lines) const;
  bool budget_from_scopf() const { return cost_budget < 0.0; }
};

enum class MeasurementKind { ForwardFlow, BackwardFlow, Consumption };

struct GridCase {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<LoadSpec> loads;
  std::vector<MeasurementConfig> measurements;
  AttackerLimits attacker;
  int slack_bus = 1;

  bool operator==(const GridCase&) const = default;

  int num_buses() const { return static_cast<int>(buses.size()); }
  int num_lines() const { return static_cast<int>(lines.size()); }
  int num_measurements() const { return static_cast<int>(measurements.size()); }
  int num_states() const { return num_buses() - 1; }

  const Generator* generator_at(int bus) const;
  const LoadSpec* load_at(int bus) const;

  /// Current load per bus (0-based, zero where there is no load record).
  Eigen::VectorXd load_vector() const;
  Eigen::VectorXd load_min_vector() const;
  Eigen::VectorXd load_max_vector() const;

  /// Column index of bus `bus` in slack-reduced matrices, or -1 for the slack.
  int state_index(int bus) const;

  MeasurementKind measurement_kind(int index) const;
  /// Line id (kinds ForwardFlow/BackwardFlow) or bus id (Consumption).
  int measurement_element(int index) const;
  /// Bus where the meter for measurement `index` sits.
  int metering_bus(int index) const;
};

/// Trailing `# ...` comment attached to a data record, kept for fixture
/// provenance.
struct RecordNote {
  std::string section;
  int record = 0;  // 0-based position inside the section
  std::string text;
};

struct AnnotatedCase {
  GridCase grid;
  std::vector<RecordNote> notes;
};

GridCase parse_case(std::string_view text);
AnnotatedCase parse_case_annotated(std::string_view text);
std::string serialize_case(const GridCase& grid);
GridCase load_case_file(const std::filesystem::path& path);

/// Throws ValidationError naming the first violated invariant.
void validate(const GridCase& grid);

/// Lines whose removal disconnects the network (bridges of the line graph).
std::vector<bool> find_bridges(const GridCase& grid);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

}  // namespace gridthreat
