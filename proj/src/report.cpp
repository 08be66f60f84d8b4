#include "itsbft/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

namespace itsbft {

namespace {

using Json = nlohmann::ordered_json;

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string format_seconds(double s) {
  if (s == std::floor(s) && std::abs(s) < 1e15) return std::to_string(static_cast<long long>(s));
  return fixed2(s);
}

Json demand_json(const DemandOutcome& d) {
  Json j;
  j["id"] = d.demand.id;
  j["src"] = d.demand.src;
  j["dst"] = d.demand.dst;
  j["amount_bits"] = d.demand.amount_bits;
  j["synthetic"] = d.synthetic;
  j["served"] = d.served;
  j["served_at"] = d.served_at ? Json(*d.served_at) : Json(nullptr);
  j["paths"] = d.beta;
  j["delivered_pre_pa_bits"] = d.delivered_pre_pa_bits;
  j["final_key_bits"] = d.final_key_bits;
  j["eavesdrop_percent"] = d.eavesdrop_percent;
  j["exposed_paths"] = d.exposed_paths;
  j["aborts"] = d.aborts;
  return j;
}

}  // namespace

std::vector<BatchResult> run_batch(const std::vector<ScenarioConfig>& configs, const std::vector<std::uint64_t>& seeds,
                                   unsigned jobs) {
  std::vector<ScenarioConfig> work;
  for (const auto& c : configs) {
    if (seeds.empty()) {
      work.push_back(c);
      continue;
    }
    for (auto s : seeds) {
      work.push_back(c);
      work.back().seed = s;
    }
  }
  std::vector<BatchResult> results(work.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      const auto& c = work[i];
      auto& r = results[i];
      r.scenario = c.name;
      r.topology = c.topology_name;
      r.f = c.fault_bound();
      r.seed = c.seed;
      try {
        r.report = run_scenario(c);
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(work.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

std::string format_kb(std::uint64_t bits) { return fixed2(static_cast<double>(bits) / 1000.0); }

std::string summary_table(const std::vector<BatchResult>& results) {
  std::vector<std::vector<std::string>> rows{
      {"topology", "f", "total Kb", "consensus Kb", "delivery Kb", "eavesdrop %", "time s"}};
  for (const auto& r : results) {
    std::vector<std::string> row{r.topology, std::to_string(r.f)};
    if (!r.report) {
      row.insert(row.end(), {"-", "-", "-", "error", "-"});
    } else if (r.report->infeasible) {
      row.insert(row.end(), {"-", "-", "-", "100.00%", "-"});
    } else {
      const auto& m = *r.report;
      row.insert(row.end(), {format_kb(m.total_bits), format_kb(m.consensus_bits), format_kb(m.delivery_bits),
                             fixed2(m.eavesdrop_worst_percent) + "%", format_seconds(m.time_s)});
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += " | ";
      out += row[i];
      if (i + 1 < row.size()) out.append(width[i] - row[i].size(), ' ');
    }
    out += '\n';
  }
  return out;
}

std::string json_record(const BatchResult& r) {
  Json j;
  j["scenario"] = r.scenario;
  j["topology"] = r.topology;
  j["f"] = r.f;
  j["seed"] = r.seed;
  if (!r.report) {
    j["error"] = r.error;
    return j.dump();
  }
  const auto& m = *r.report;
  j["infeasible"] = m.infeasible;
  j["total_bits"] = m.total_bits;
  j["consensus_bits"] = m.consensus_bits;
  j["delivery_bits"] = m.delivery_bits;
  j["eavesdrop_worst_percent"] = m.eavesdrop_worst_percent;
  j["ticks"] = m.ticks;
  j["time_s"] = m.time_s;
  j["views_executed"] = m.views_executed;
  j["safety_violation"] = m.safety_violation;
  j["liveness_violation"] = m.liveness_violation;
  j["violations"] = m.violations;
  j["evidence"] = m.evidence;
  Json demands = Json::array();
  for (const auto& d : m.demands) demands.push_back(demand_json(d));
  j["demands"] = std::move(demands);
  Json checks;
  checks["ts_keys_drawn"] = m.ts_keys_drawn;
  checks["consensus_closed_form_bits"] = m.consensus_closed_form_bits;
  checks["delivery_closed_form_bits"] = m.delivery_closed_form_bits;
  checks["auth_tags"] = m.auth_tags;
  checks["auth_key_bits"] = m.auth_key_bits;
  checks["ts_rejections"] = m.ts_rejections;
  checks["dropped_late"] = m.dropped_late;
  checks["forged_sent"] = m.forged_sent;
  j["consistency"] = std::move(checks);
  return j.dump();
}

std::string json_records(const std::vector<BatchResult>& results) {
  std::string out;
  for (const auto& r : results) out += json_record(r) + "\n";
  return out;
}

}  // namespace itsbft
