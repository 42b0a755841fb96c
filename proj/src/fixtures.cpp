#include "gridthreat/fixtures.hpp"

#include "gridthreat/error.hpp"

#include <sstream>

namespace gridthreat {

namespace detail {
extern const std::string_view kFixture3Bus;
extern const std::string_view kFixtureIeee14;
}  // namespace detail

const ExpectedValue* FixtureManifest::find(std::string_view key) const {
  for (const auto& e : expectations) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

std::vector<std::string> fixture_names() { return {"3bus", "ieee14"}; }

std::string_view fixture_text(std::string_view name) {
  if (name == "3bus") return detail::kFixture3Bus;
  if (name == "ieee14") return detail::kFixtureIeee14;
  throw Error("unknown fixture '" + std::string(name) + "' (known: 3bus, ieee14)");
}

Fixture load_fixture(std::string_view name) {
  const std::string_view text = fixture_text(name);
  AnnotatedCase ac = parse_case_annotated(text);
  Fixture fx;
  fx.grid = std::move(ac.grid);
  fx.manifest.name = std::string(name);
  fx.manifest.provenance = std::move(ac.notes);
  // "# expect <key> <value> <hard|soft>" lines carry expected values.
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string hash, word, key, value, kind;
    if (!(ls >> hash >> word >> key >> value >> kind)) continue;
    if (hash != "#" || word != "expect") continue;
    fx.manifest.expectations.push_back({key, value, kind == "hard"});
  }
  return fx;
}

}  // namespace gridthreat
