#include "gridthreat/evaluation.hpp"

#include "gridthreat/csv.hpp"
#include "gridthreat/error.hpp"
#include "gridthreat/scopf.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

namespace gridthreat {

std::string SecuringSpec::label() const {
  switch (policy) {
    case SecuringPolicy::None: return "none";
    case SecuringPolicy::Random:
      if (count >= 0) return "random-" + std::to_string(count);
      return "random-" + fixed(100.0 * fraction, 2) + "%";
    case SecuringPolicy::Analytical: return "analytical-top" + std::to_string(top_k);
  }
  return "unknown";
}

GridCase apply_securing(const GridCase& grid, const SecuringSpec& spec,
                        const std::vector<int>& ranking, int* secured_count) {
  GridCase out = grid;
  int secured = 0;
  switch (spec.policy) {
    case SecuringPolicy::None: break;
    case SecuringPolicy::Random: {
      std::vector<int> pool;
      for (const auto& m : grid.measurements) {
        if (m.taken && !m.secured) pool.push_back(m.index);
      }
      const int want = spec.count >= 0
                           ? spec.count
                           : static_cast<int>(std::lround(spec.fraction * pool.size()));
      const int n = std::min<int>(want, static_cast<int>(pool.size()));
      // Partial Fisher-Yates on a fixed engine so draws do not depend on
      // the standard library's distribution code.
      std::mt19937_64 rng(spec.seed);
      for (int i = 0; i < n; ++i) {
        const auto span = static_cast<std::uint64_t>(pool.size() - i);
        const auto pick = static_cast<size_t>(i + rng() % span);
        std::swap(pool[i], pool[pick]);
        out.measurements[pool[i] - 1].secured = true;
      }
      secured = n;
      break;
    }
    case SecuringPolicy::Analytical: {
      const int k = std::min<int>(spec.top_k, static_cast<int>(ranking.size()));
      std::vector<bool> top(grid.num_buses() + 1, false);
      for (int i = 0; i < k; ++i) top[ranking[i]] = true;
      for (auto& m : out.measurements) {
        if (m.taken && !m.secured && top[grid.metering_bus(m.index)]) {
          m.secured = true;
          ++secured;
        }
      }
      break;
    }
  }
  if (secured_count) *secured_count = secured;
  return out;
}

std::vector<int> rank_buses_by_frequency(const std::vector<long long>& frequency) {
  std::vector<int> buses;
  for (size_t j = 0; j < frequency.size(); ++j) {
    if (frequency[j] > 0) buses.push_back(static_cast<int>(j) + 1);
  }
  std::stable_sort(buses.begin(), buses.end(), [&](int a, int b) {
    return frequency[a - 1] > frequency[b - 1];
  });
  return buses;
}

std::vector<int> rank_buses_by_frequency(const std::vector<AttackVector>& vectors) {
  std::vector<long long> freq;
  for (const auto& v : vectors) {
    if (freq.size() < v.compromised.size()) freq.resize(v.compromised.size(), 0);
    for (size_t j = 0; j < v.compromised.size(); ++j) freq[j] += v.compromised[j];
  }
  return rank_buses_by_frequency(freq);
}

namespace {

struct CellJob {
  SweepCell cell;
  SecuringSpec securing;
};

struct CellOutput {
  AttackSpaceSummary summary;
  bool ok = false;
};

GridCase with_limits(const GridCase& grid, const SweepCell& c) {
  GridCase g = grid;
  g.attacker.delta_b = c.delta_b;
  g.attacker.delta_l = c.delta_l;
  g.attacker.target_line_fraction = c.line_fraction;
  g.attacker.max_buses = c.max_buses;
  return g;
}

}  // namespace

SweepResult run_sweep(const GridCase& grid, const SweepSpec& spec) {
  if (spec.delta_b.empty() || spec.delta_l.empty() || spec.line_fraction.empty() ||
      spec.max_buses.empty() || spec.securing.empty()) {
    throw ValidationError("every sweep grid needs at least one value");
  }
  const ScopfSolution pre = solve_scopf(grid, grid.load_vector());

  std::vector<CellJob> jobs;
  for (int tb : spec.max_buses) {
    for (double db : spec.delta_b) {
      for (double dl : spec.delta_l) {
        for (double lf : spec.line_fraction) {
          for (const auto& sec : spec.securing) {
            const int reps = sec.policy == SecuringPolicy::Random ? std::max(1, spec.repetitions) : 1;
            for (int rep = 0; rep < reps; ++rep) {
              CellJob job;
              job.cell.delta_b = db;
              job.cell.delta_l = dl;
              job.cell.line_fraction = lf;
              job.cell.max_buses = tb;
              job.cell.policy = sec.label();
              job.cell.repetition = rep;
              job.securing = sec;
              job.securing.seed = sec.seed + static_cast<std::uint64_t>(rep);
              job.cell.seed = sec.policy == SecuringPolicy::Random ? job.securing.seed : 0;
              jobs.push_back(job);
            }
          }
        }
      }
    }
  }

  std::vector<CellOutput> outputs(jobs.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i = next++; i < jobs.size(); i = next++) {
      CellJob& job = jobs[i];
      try {
        const GridCase limited = with_limits(grid, job.cell);
        std::vector<int> ranking;
        if (job.securing.policy == SecuringPolicy::Analytical) {
          const AttackSpaceSummary base =
              summarize_attack_space(limited, pre, goal_from_case(limited, pre));
          ranking = rank_buses_by_frequency(base.bus_frequency);
        }
        const GridCase secured = apply_securing(limited, job.securing, ranking, &job.cell.secured);
        outputs[i].summary = summarize_attack_space(secured, pre, goal_from_case(secured, pre));
        outputs[i].ok = true;
        job.cell.attack_space = outputs[i].summary.count;
      } catch (const std::exception& e) {
        job.cell.error = e.what();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(spec.workers, static_cast<int>(jobs.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  SweepResult res;
  res.num_buses = grid.num_buses();
  res.num_lines = grid.num_lines();
  res.bus_frequency.assign(grid.num_buses(), 0);
  for (size_t i = 0; i < jobs.size(); ++i) {
    res.cells.push_back(jobs[i].cell);
    if (!outputs[i].ok) continue;
    const auto& s = outputs[i].summary;
    for (int j = 0; j < grid.num_buses(); ++j) res.bus_frequency[j] += s.bus_frequency[j];
    auto [it, fresh] = res.heatmaps.try_emplace(jobs[i].cell.max_buses);
    if (fresh) it->second = Eigen::MatrixXi::Zero(grid.num_lines(), grid.num_lines());
    it->second += s.heatmap;
  }
  return res;
}

void write_sweep_outputs(const SweepResult& result, const std::filesystem::path& dir) {
  std::string space = csv_row({"delta_b", "delta_l", "line_fraction", "max_buses", "policy", "seed",
                               "repetition", "secured", "attack_space", "error"});
  for (const auto& c : result.cells) {
    space += csv_row({fixed(c.delta_b, 6), fixed(c.delta_l, 6), fixed(c.line_fraction, 6),
                      std::to_string(c.max_buses), c.policy, std::to_string(c.seed),
                      std::to_string(c.repetition), std::to_string(c.secured),
                      std::to_string(c.attack_space), c.error});
  }
  write_file_atomic(dir / "attack_space.csv", space);

  std::string freq = csv_row({"bus", "count", "rank"});
  const std::vector<int> ranking = rank_buses_by_frequency(result.bus_frequency);
  for (int j = 1; j <= result.num_buses; ++j) {
    const auto it = std::find(ranking.begin(), ranking.end(), j);
    const std::string rank = it == ranking.end() ? "" : std::to_string(it - ranking.begin() + 1);
    freq += csv_row({std::to_string(j), std::to_string(result.bus_frequency[j - 1]), rank});
  }
  write_file_atomic(dir / "bus_frequency.csv", freq);

  for (const auto& [tb, heat] : result.heatmaps) {
    std::vector<std::string> header{"outage"};
    for (int i = 1; i <= result.num_lines; ++i) header.push_back(std::to_string(i));
    std::string text = csv_row(header);
    for (int k = 0; k < heat.rows(); ++k) {
      std::vector<std::string> row{std::to_string(k + 1)};
      for (int i = 0; i < heat.cols(); ++i) row.push_back(std::to_string(heat(k, i)));
      text += csv_row(row);
    }
    write_file_atomic(dir / ("heatmap_TB" + std::to_string(tb) + ".csv"), text);
  }
}

}  // namespace gridthreat
