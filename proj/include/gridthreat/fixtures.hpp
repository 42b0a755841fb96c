#pragma once

#include "gridthreat/grid_model.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace gridthreat {

struct ExpectedValue {
  std::string key;
  std::string value;
  bool hard = false;  // false: soft annotation, not asserted exactly
};

struct FixtureManifest {
  std::string name;
  std::vector<RecordNote> provenance;
  std::vector<ExpectedValue> expectations;

  const ExpectedValue* find(std::string_view key) const;
};

std::vector<std::string> fixture_names();

/// Raw case-file text of a bundled fixture. Throws Error on unknown names.
std::string_view fixture_text(std::string_view name);

struct Fixture {
  GridCase grid;
  FixtureManifest manifest;
};

Fixture load_fixture(std::string_view name);

}  // namespace gridthreat
