#include "gridthreat/grid_model.hpp"

#include "gridthreat/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>

namespace gridthreat {

int AttackerLimits::target_lines(int num_lines) const {
  const double raw = target_line_fraction * num_lines;
  return static_cast<int>(std::ceil(raw - 1e-9));
}

const Generator* GridCase::generator_at(int bus) const {
  for (const auto& g : generators) {
    if (g.bus == bus) return &g;
  }
  return nullptr;
}

const LoadSpec* GridCase::load_at(int bus) const {
  for (const auto& d : loads) {
    if (d.bus == bus) return &d;
  }
  return nullptr;
}

Eigen::VectorXd GridCase::load_vector() const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(num_buses());
  for (const auto& d : loads) v[d.bus - 1] = d.current;
  return v;
}

Eigen::VectorXd GridCase::load_min_vector() const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(num_buses());
  for (const auto& d : loads) v[d.bus - 1] = d.min;
  return v;
}

Eigen::VectorXd GridCase::load_max_vector() const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(num_buses());
  for (const auto& d : loads) v[d.bus - 1] = d.max;
  return v;
}

int GridCase::state_index(int bus) const {
  if (bus == slack_bus) return -1;
  return bus < slack_bus ? bus - 1 : bus - 2;
}

MeasurementKind GridCase::measurement_kind(int index) const {
  const int l = num_lines();
  if (index <= l) return MeasurementKind::ForwardFlow;
  if (index <= 2 * l) return MeasurementKind::BackwardFlow;
  return MeasurementKind::Consumption;
}

int GridCase::measurement_element(int index) const {
  const int l = num_lines();
  if (index <= l) return index;
  if (index <= 2 * l) return index - l;
  return index - 2 * l;
}

int GridCase::metering_bus(int index) const {
  const int element = measurement_element(index);
  switch (measurement_kind(index)) {
    case MeasurementKind::ForwardFlow:
      return lines[element - 1].from_bus;
    case MeasurementKind::BackwardFlow:
      return lines[element - 1].to_bus;
    case MeasurementKind::Consumption:
      return element;
  }
  return element;
}

// ---------------------------------------------------------------------------
// Number formatting

std::string format_number(double value) {
  if (value == 0.0) return "0";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf.data(), end);
}

namespace {

std::optional<double> parse_double(std::string_view tok) {
  double v = 0.0;
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> parse_int(std::string_view tok) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

// Percent fields are written as percentages and stored as fractions.
// Both directions move the decimal point in text rather than multiplying
// or dividing by 100, so every fraction survives a round trip.
std::optional<double> parse_percent(std::string_view tok) {
  if (!parse_double(tok)) return std::nullopt;
  std::string text(tok);
  const auto e = text.find_first_of("eE");
  if (e == std::string::npos) {
    text += "e-2";
  } else {
    std::string_view ex = std::string_view(text).substr(e + 1);
    if (!ex.empty() && ex.front() == '+') ex.remove_prefix(1);
    const auto power = parse_int(ex);
    if (!power) return std::nullopt;
    text = text.substr(0, e) + "e" + std::to_string(*power - 2);
  }
  return parse_double(text);
}

std::string format_percent(double fraction) {
  if (fraction == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, fraction, std::chars_format::scientific);
  const std::string sci(buf, res.ptr);
  const auto e = sci.find('e');
  std::string mant = sci.substr(0, e);
  const int exp10 = *parse_int(sci[e + 1] == '+' ? sci.substr(e + 2) : sci.substr(e + 1));
  std::string sign;
  if (mant.front() == '-') {
    sign = "-";
    mant.erase(0, 1);
  }
  std::string digits;
  for (char c : mant) {
    if (c != '.') digits += c;
  }
  // value = 0.digits * 10^(exp10 + 1); percent moves the point two more places
  const int point = exp10 + 3;
  const int n = static_cast<int>(digits.size());
  std::string out;
  if (point <= 0) {
    out = "0." + std::string(-point, '0') + digits;
  } else if (point >= n) {
    out = digits + std::string(point - n, '0');
  } else {
    out = digits.substr(0, point) + "." + digits.substr(point);
  }
  return sign + out;
}

enum class Section {
  Lines,
  Buses,
  Generators,
  Loads,
  Measurements,
  Cost,
  Resources,
  DeltaLoad,
  Overload,
  Slack,
  None
};

constexpr std::array<const char*, 10> kSectionNames = {
    "lines",   "bus types",  "generators", "loads",      "measurements",
    "cost",    "resources",  "delta load", "overload",   "slack"};

std::string section_name(Section s) {
  if (s == Section::None) return "preamble";
  return kSectionNames[static_cast<size_t>(s)];
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<Section> match_section(std::string_view comment) {
  const std::string c = lower(comment);
  auto has = [&](const char* needle) { return c.find(needle) != std::string::npos; };
  if (has("topology") || has("line information")) return Section::Lines;
  if (has("bus type")) return Section::Buses;
  if (has("generator information")) return Section::Generators;
  if (has("load information")) return Section::Loads;
  if (has("measurement information")) return Section::Measurements;
  if (has("cost constraint")) return Section::Cost;
  if (has("resource limitation")) return Section::Resources;
  if (has("delta load")) return Section::DeltaLoad;
  if (has("overloading amount")) return Section::Overload;
  if (has("slack bus")) return Section::Slack;
  return std::nullopt;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

class CaseParser {
 public:
  AnnotatedCase run(std::string_view text) {
    size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
      size_t eol = text.find('\n', pos);
      if (eol == std::string_view::npos) eol = text.size();
      const std::string_view raw = text.substr(pos, eol - pos);
      pos = eol + 1;
      ++line_no;
      line_ = line_no;
      const std::string_view content = trim(raw);
      if (content.empty()) {
        if (eol == text.size()) break;
        continue;
      }
      if (content.front() == '#') {
        // a header repeated in a column legend stays in the same section
        if (auto s = match_section(content.substr(1)); s && *s != section_) enter(*s);
        if (eol == text.size()) break;
        continue;
      }
      std::string_view data = content;
      std::string note;
      if (auto hash = content.find('#'); hash != std::string_view::npos) {
        data = trim(content.substr(0, hash));
        note = std::string(trim(content.substr(hash + 1)));
      }
      record(split_ws(data), note);
      if (eol == text.size()) break;
    }
    finish();
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(line_, section_name(section_), what);
  }

  void enter(Section s) {
    if (s == Section::Slack) {
      if (!seen_[static_cast<size_t>(Section::Overload)]) {
        fail("slack bus section must follow the overload section");
      }
    } else if (section_ != Section::None && static_cast<int>(s) <= static_cast<int>(section_)) {
      fail("section '" + section_name(s) + "' out of order");
    } else if (static_cast<int>(s) != static_cast<int>(section_) + 1 &&
               !(section_ == Section::None && s == Section::Lines)) {
      fail("section '" + section_name(s) + "' appears before '" +
           section_name(static_cast<Section>(static_cast<int>(section_) + 1)) + "'");
    }
    section_ = s;
    seen_[static_cast<size_t>(s)] = true;
    records_in_section_ = 0;
  }

  double percent(std::string_view tok, const char* field) const {
    auto v = parse_percent(tok);
    if (!v) fail(std::string("bad number for ") + field + ": '" + std::string(tok) + "'");
    return *v;
  }

  double num(std::string_view tok, const char* field) const {
    auto v = parse_double(tok);
    if (!v) fail(std::string("bad number for ") + field + ": '" + std::string(tok) + "'");
    return *v;
  }

  int integer(std::string_view tok, const char* field) const {
    auto v = parse_int(tok);
    if (!v) fail(std::string("bad integer for ") + field + ": '" + std::string(tok) + "'");
    return *v;
  }

  bool flag(std::string_view tok, const char* field) const {
    const int v = integer(tok, field);
    if (v != 0 && v != 1) fail(std::string(field) + " must be 0 or 1");
    return v == 1;
  }

  void expect_fields(const std::vector<std::string_view>& f, size_t n) const {
    if (f.size() != n) {
      fail("expected " + std::to_string(n) + " fields, found " + std::to_string(f.size()));
    }
  }

  void record(const std::vector<std::string_view>& f, const std::string& note) {
    GridCase& g = out_.grid;
    switch (section_) {
      case Section::None:
        fail("data record before the first section marker");
      case Section::Lines: {
        // Optional trailing flags (knowledge, in topology, core, secured) are
        // accepted and dropped.
        if (f.size() < 5 || f.size() > 9) {
          fail("expected 5 to 9 fields, found " + std::to_string(f.size()));
        }
        for (size_t k = 5; k < f.size(); ++k) flag(f[k], "line flag");
        Line ln{integer(f[0], "line no"), integer(f[1], "from bus"), integer(f[2], "to bus"),
                num(f[3], "admittance"), num(f[4], "line capacity")};
        if (ln.id != g.num_lines() + 1) fail("line numbers must be contiguous from 1");
        if (ln.from_bus == ln.to_bus) fail("line connects a bus to itself");
        if (!(ln.admittance > 0.0)) fail("admittance must be positive");
        if (!(ln.capacity > 0.0)) fail("line capacity must be positive");
        g.lines.push_back(ln);
        break;
      }
      case Section::Buses: {
        expect_fields(f, 3);
        Bus b{integer(f[0], "bus no"), flag(f[1], "is generator"), flag(f[2], "is load")};
        if (b.id != g.num_buses() + 1) fail("bus numbers must be contiguous from 1");
        g.buses.push_back(b);
        break;
      }
      case Section::Generators: {
        expect_fields(f, 5);
        g.generators.push_back(Generator{integer(f[0], "bus no"), num(f[1], "max generation"),
                                         num(f[2], "min generation"), num(f[3], "alpha"),
                                         num(f[4], "beta")});
        break;
      }
      case Section::Loads: {
        expect_fields(f, 4);
        g.loads.push_back(LoadSpec{integer(f[0], "bus no"), num(f[1], "existing load"),
                                   num(f[2], "max load"), num(f[3], "min load")});
        break;
      }
      case Section::Measurements: {
        expect_fields(f, 4);
        MeasurementConfig m{integer(f[0], "measurement no"), flag(f[1], "taken"),
                            flag(f[2], "secured"), flag(f[3], "attacker can alter")};
        if (m.index != g.num_measurements() + 1) fail("measurement numbers must be contiguous from 1");
        g.measurements.push_back(m);
        break;
      }
      case Section::Cost:
        expect_fields(f, 1);
        scalar_once();
        g.attacker.cost_budget = num(f[0], "cost constraint");
        break;
      case Section::Resources:
        expect_fields(f, 2);
        scalar_once();
        g.attacker.max_measurements = integer(f[0], "max measurements");
        g.attacker.max_buses = integer(f[1], "max buses");
        break;
      case Section::DeltaLoad:
        expect_fields(f, 1);
        scalar_once();
        g.attacker.delta_b = percent(f[0], "delta load percent");
        break;
      case Section::Overload:
        expect_fields(f, 2);
        scalar_once();
        g.attacker.delta_l = percent(f[0], "overload percent");
        g.attacker.target_line_fraction = percent(f[1], "line percent");
        break;
      case Section::Slack:
        expect_fields(f, 1);
        scalar_once();
        g.slack_bus = integer(f[0], "slack bus");
        break;
    }
    if (!note.empty()) {
      out_.notes.push_back(RecordNote{section_name(section_), records_in_section_, note});
    }
    ++records_in_section_;
    ++counts_[static_cast<size_t>(section_)];
  }

  void scalar_once() const {
    if (records_in_section_ > 0) fail("section holds a single record");
  }

  void finish() {
    for (size_t s = 0; s < static_cast<size_t>(Section::Slack); ++s) {
      if (!seen_[s]) {
        throw ParseError(line_, section_name(static_cast<Section>(s)), "missing section");
      }
    }
    for (Section s : {Section::Cost, Section::Resources, Section::DeltaLoad, Section::Overload}) {
      if (!filled(s)) throw ParseError(line_, section_name(s), "section has no record");
    }
    validate(out_.grid);
  }

  bool filled(Section s) const { return counts_[static_cast<size_t>(s)] > 0; }

  AnnotatedCase out_;
  Section section_ = Section::None;
  std::array<bool, 10> seen_{};
  int records_in_section_ = 0;
  std::array<int, 10> counts_{};
  int line_ = 0;
};

bool connected_without(const GridCase& grid, int skip_line) {
  const int b = grid.num_buses();
  if (b == 0) return false;
  std::vector<std::vector<int>> adj(b);
  for (const auto& ln : grid.lines) {
    if (ln.id == skip_line) continue;
    adj[ln.from_bus - 1].push_back(ln.to_bus - 1);
    adj[ln.to_bus - 1].push_back(ln.from_bus - 1);
  }
  std::vector<bool> seen(b, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int count = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        q.push(v);
      }
    }
  }
  return count == b;
}

}  // namespace

void validate(const GridCase& g) {
  const int b = g.num_buses();
  const int l = g.num_lines();
  if (b < 2 || l < 1) throw ValidationError("a case needs at least two buses and one line");
  for (int j = 0; j < b; ++j) {
    if (g.buses[j].id != j + 1) throw ValidationError("bus ids must be contiguous 1..b");
  }
  for (int i = 0; i < l; ++i) {
    const Line& ln = g.lines[i];
    if (ln.id != i + 1) throw ValidationError("line ids must be contiguous 1..l");
    for (int end : {ln.from_bus, ln.to_bus}) {
      if (end < 1 || end > b) {
        throw ValidationError("line " + std::to_string(ln.id) + " references unknown bus " +
                              std::to_string(end));
      }
    }
    if (ln.from_bus == ln.to_bus) {
      throw ValidationError("line " + std::to_string(ln.id) + " connects a bus to itself");
    }
    if (!(ln.admittance > 0.0) || !(ln.capacity > 0.0)) {
      throw ValidationError("line " + std::to_string(ln.id) +
                            " needs positive admittance and capacity");
    }
  }
  std::vector<int> gen_count(b, 0);
  for (const auto& gen : g.generators) {
    if (gen.bus < 1 || gen.bus > b) {
      throw ValidationError("generator references unknown bus " + std::to_string(gen.bus));
    }
    if (++gen_count[gen.bus - 1] > 1) {
      throw ValidationError("bus " + std::to_string(gen.bus) + " has more than one generator");
    }
    if (!(gen.p_min >= 0.0 && gen.p_min <= gen.p_max)) {
      throw ValidationError("generator at bus " + std::to_string(gen.bus) +
                            " needs 0 <= p_min <= p_max");
    }
    if (!g.buses[gen.bus - 1].is_generator) {
      throw ValidationError("generator record at bus " + std::to_string(gen.bus) +
                            " which is not flagged as a generator bus");
    }
  }
  std::vector<int> load_count(b, 0);
  for (const auto& d : g.loads) {
    if (d.bus < 1 || d.bus > b) {
      throw ValidationError("load references unknown bus " + std::to_string(d.bus));
    }
    if (++load_count[d.bus - 1] > 1) {
      throw ValidationError("bus " + std::to_string(d.bus) + " has more than one load record");
    }
    if (!(d.min <= d.current && d.current <= d.max)) {
      throw ValidationError("load at bus " + std::to_string(d.bus) + " needs min <= current <= max");
    }
    if (!g.buses[d.bus - 1].is_load) {
      throw ValidationError("load record at bus " + std::to_string(d.bus) +
                            " which is not flagged as a load bus");
    }
  }
  for (int j = 0; j < b; ++j) {
    if (g.buses[j].is_generator && gen_count[j] == 0) {
      throw ValidationError("bus " + std::to_string(j + 1) +
                            " is flagged as a generator bus but has no generator record");
    }
    if (g.buses[j].is_load && load_count[j] == 0) {
      throw ValidationError("bus " + std::to_string(j + 1) +
                            " is flagged as a load bus but has no load record");
    }
  }
  if (g.num_measurements() != 2 * l + b) {
    throw ValidationError("measurement count " + std::to_string(g.num_measurements()) +
                          " does not equal 2l + b = " + std::to_string(2 * l + b));
  }
  for (int i = 0; i < g.num_measurements(); ++i) {
    if (g.measurements[i].index != i + 1) {
      throw ValidationError("measurement indices must be contiguous 1..m");
    }
  }
  const AttackerLimits& a = g.attacker;
  if (a.max_measurements < 0 || a.max_buses < 0) {
    throw ValidationError("attacker resource limits must be non-negative");
  }
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(a.delta_b) || !unit(a.delta_l) || !unit(a.target_line_fraction)) {
    throw ValidationError("attacker percentages must lie in [0, 100]");
  }
  if (g.slack_bus < 1 || g.slack_bus > b) {
    throw ValidationError("slack bus " + std::to_string(g.slack_bus) + " does not exist");
  }
  if (!connected_without(g, 0)) throw ValidationError("line graph is disconnected");
  double cap = 0.0;
  for (const auto& gen : g.generators) cap += gen.p_max;
  double load = 0.0;
  for (const auto& d : g.loads) load += d.current;
  if (cap + 1e-12 < load) {
    throw ValidationError("total generation capacity is below total load");
  }
}

std::vector<bool> find_bridges(const GridCase& grid) {
  std::vector<bool> out(grid.lines.size(), false);
  for (const auto& ln : grid.lines) out[ln.id - 1] = !connected_without(grid, ln.id);
  return out;
}

AnnotatedCase parse_case_annotated(std::string_view text) { return CaseParser{}.run(text); }

GridCase parse_case(std::string_view text) { return parse_case_annotated(text).grid; }

GridCase load_case_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open case file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str());
}

std::string serialize_case(const GridCase& g) {
  validate(g);
  std::ostringstream os;
  os << "# Topology (Line) Information\n"
     << "# (line no, from bus, to bus, admittance, line capacity)\n";
  for (const auto& ln : g.lines) {
    os << ln.id << ' ' << ln.from_bus << ' ' << ln.to_bus << ' ' << format_number(ln.admittance)
       << ' ' << format_number(ln.capacity) << '\n';
  }
  os << "\n# Bus Types (bus no, is generator?, is load?)\n";
  for (const auto& b : g.buses) {
    os << b.id << ' ' << int(b.is_generator) << ' ' << int(b.is_load) << '\n';
  }
  os << "\n# Generator Information (bus no, max generation, min generation, alpha, beta)\n";
  for (const auto& gen : g.generators) {
    os << gen.bus << ' ' << format_number(gen.p_max) << ' ' << format_number(gen.p_min) << ' '
       << format_number(gen.alpha) << ' ' << format_number(gen.beta) << '\n';
  }
  os << "\n# Load Information (bus no, existing load, max load, min load)\n";
  for (const auto& d : g.loads) {
    os << d.bus << ' ' << format_number(d.current) << ' ' << format_number(d.max) << ' '
       << format_number(d.min) << '\n';
  }
  os << "\n# Measurement Information\n"
     << "# (measurement no, measurement taken?, secured?, can attacker alter?)\n";
  for (const auto& m : g.measurements) {
    os << m.index << ' ' << int(m.taken) << ' ' << int(m.secured) << ' ' << int(m.accessible)
       << '\n';
  }
  const AttackerLimits& a = g.attacker;
  os << "\n# Cost Constraint\n"
     << (a.budget_from_scopf() ? std::string("-1") : format_number(a.cost_budget)) << '\n';
  os << "\n# Attacker's Resource Limitation (measurements, buses)\n"
     << a.max_measurements << ' ' << a.max_buses << '\n';
  os << "\n# Maximum percent of delta load\n" << format_percent(a.delta_b) << '\n';
  os << "\n# % of minimum Overloading amount, % of lines to be overloaded\n"
     << format_percent(a.delta_l) << ' ' << format_percent(a.target_line_fraction) << '\n';
  if (g.slack_bus != 1) os << "\n# Slack Bus\n" << g.slack_bus << '\n';
  return os.str();
}

}  // namespace gridthreat
