// Command-line front end: run scenarios, batch them into the summary table,
// dump traces, and inspect topologies.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "itsbft/report.hpp"
#include "itsbft/scenario.hpp"
#include "itsbft/topology.hpp"

using namespace itsbft;

namespace {

constexpr int kExitError = 1;
constexpr int kExitSafety = 2;

// Flags shared by every subcommand that loads a scenario.
struct Overrides {
  std::vector<std::string> set;
  std::optional<std::uint64_t> seed, view_limit, capacity_bits, cap_bits, contention_bits, f;
  std::optional<double> delta, epsilon, epsilon_k;
  std::optional<unsigned> omega;
  std::optional<std::size_t> key_len;
  std::optional<std::string> name;

  void add_to(CLI::App* app) {
    app->add_option("--set", set, "Override any field: dotted.path=yaml-value (repeatable)");
    app->add_option("--seed", seed, "Simulation seed");
    app->add_option("--view-limit", view_limit, "Maximum number of views");
    app->add_option("--capacity-bits", capacity_bits, "Pre-stored key bits per link");
    app->add_option("--cap-bits", cap_bits, "Per-link key bits one view may spend on delivery");
    app->add_option("--contention-bits", contention_bits, "Size of each synthetic contention demand");
    app->add_option("--f", f, "Protocol fault bound (default: number of Byzantine nodes)");
    app->add_option("--delta", delta, "Seconds per slot");
    app->add_option("--epsilon", epsilon, "Privacy-amplification security bound");
    app->add_option("--epsilon-k", epsilon_k, "Authentication failure bound");
    app->add_option("--omega", omega, "Authenticator field degree");
    app->add_option("--key-len", key_len, "Temporary-signature key length in bits");
    app->add_option("--name", name, "Scenario name");
  }

  std::vector<std::string> all() const {
    std::vector<std::string> out = set;
    const auto put = [&](const char* path, const auto& v) {
      if (!v) return;
      std::ostringstream s;
      s.precision(17);
      s << *v;
      out.push_back(std::string(path) + "=" + s.str());
    };
    put("seed", seed);
    put("view_limit", view_limit);
    put("capacity_bits", capacity_bits);
    put("cap_bits", cap_bits);
    put("contention_bits", contention_bits);
    put("f", f);
    put("delta_seconds", delta);
    put("security.epsilon", epsilon);
    put("security.epsilon_k", epsilon_k);
    put("security.omega", omega);
    put("security.ts_key_len_bits", key_len);
    if (name) out.push_back("name=\"" + *name + "\"");
    return out;
  }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << text;
}

void print_demands(const MetricsReport& r) {
  for (const auto& d : r.demands) {
    std::cout << "demand " << d.demand.id << (d.synthetic ? " (contention)" : "") << " " << d.demand.src << "->"
              << d.demand.dst << ": " << (d.served ? "served" : "not served") << ", paths " << d.beta
              << ", final key " << d.final_key_bits << " bits, eavesdrop " << std::fixed << std::setprecision(2)
              << d.eavesdrop_percent << "%" << std::defaultfloat;
    if (!d.exposed_paths.empty()) std::cout << ", exposed paths " << d.exposed_paths.size();
    std::cout << "\n";
  }
  std::cout << "views " << r.views_executed << ", ticks " << r.ticks << "\n";
  for (const auto& v : r.violations) std::cout << "VIOLATION: " << v << "\n";
  for (const auto& e : r.evidence) std::cout << "evidence: " << e << "\n";
}

int cmd_run(const std::string& file, const Overrides& ov, const std::string& json_out) {
  const auto cfg = load_scenario_file(file, ov.all());
  const auto results = run_batch({cfg}, {}, 1);
  const auto& r = results.front();
  if (!r.report) throw std::runtime_error(r.error);
  std::cout << summary_table(results);
  print_demands(*r.report);
  if (!json_out.empty()) write_file(json_out, json_records(results));
  return r.report->safety_violation ? kExitSafety : 0;
}

int cmd_batch(const std::vector<std::string>& files, const Overrides& ov, const std::vector<std::uint64_t>& seeds,
              unsigned jobs, const std::string& json_out) {
  std::vector<ScenarioConfig> configs;
  for (const auto& f : files) configs.push_back(load_scenario_file(f, ov.all()));
  const auto results = run_batch(configs, seeds, jobs);
  std::cout << summary_table(results);
  bool unsafe = false;
  for (const auto& r : results) {
    if (!r.report) std::cerr << r.scenario << " (seed " << r.seed << "): " << r.error << "\n";
    if (r.report && r.report->safety_violation) unsafe = true;
  }
  if (!json_out.empty()) write_file(json_out, json_records(results));
  return unsafe ? kExitSafety : 0;
}

int cmd_trace(const std::string& file, const Overrides& ov, const std::string& out_path) {
  const auto cfg = load_scenario_file(file, ov.all());
  std::vector<std::string> trace;
  const auto report = run_scenario(cfg, trace);
  std::ostringstream text;
  for (const auto& line : trace) text << line << "\n";
  if (out_path.empty())
    std::cout << text.str();
  else
    write_file(out_path, text.str());
  return report.safety_violation ? kExitSafety : 0;
}

int cmd_topology(const std::string& file, const Overrides& ov) {
  const auto cfg = load_scenario_file(file, ov.all());
  const auto& g = cfg.graph;
  const auto c = node_connectivity(g);
  const auto bound = byzantine_capacity(g);
  std::cout << "topology " << cfg.topology_name << ": N = " << g.node_count() << ", links = " << g.edges().size()
            << "\n";
  std::cout << "node connectivity C = " << c << "\n";
  std::cout << "Byzantine capacity min(C - 1, floor((N - 1) / 3)) = " << bound << "\n";
  std::cout << "configured f = " << cfg.fault_bound() << (cfg.fault_bound() > bound ? " (above capacity)" : "")
            << "\n";
  for (const auto& d : cfg.demands) {
    const auto ps = max_disjoint_paths(g, d.src, d.dst);
    std::cout << "demand " << d.id << " " << d.src << "->" << d.dst << ": " << ps.size() << " disjoint paths\n";
    for (const auto& p : ps.paths) {
      std::cout << "  ";
      for (std::size_t i = 0; i < p.size(); ++i) {
        std::cout << (i ? "-" : "") << p[i];
      }
      bool byz = false;
      for (std::size_t i = 1; i + 1 < p.size(); ++i) byz = byz || cfg.adversary.is_byzantine(p[i]);
      std::cout << (byz ? "  (Byzantine relay)" : "") << "\n";
    }
  }
  return 0;
}

int cmd_render(const std::string& file, const Overrides& ov) {
  std::cout << render_scenario(load_scenario_file(file, ov.all()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ITS-BFT QKD network simulator"};
  app.require_subcommand(1);

  std::string file, json_out, trace_out;
  std::vector<std::string> files;
  std::vector<std::uint64_t> seeds;
  unsigned jobs = 1;
  Overrides ov_run, ov_batch, ov_trace, ov_topo, ov_render;

  auto* run = app.add_subcommand("run", "Run one scenario and print its summary row");
  run->add_option("scenario", file, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--json", json_out, "Also write the JSON record to this file");
  ov_run.add_to(run);

  auto* batch = app.add_subcommand("batch", "Run several scenarios and print the summary table");
  batch->add_option("scenarios", files, "Scenario files")->required()->check(CLI::ExistingFile);
  batch->add_option("--seeds", seeds, "Seeds to run each scenario with (default: the scenario's own)")
      ->delimiter(',');
  batch->add_option("--jobs,-j", jobs, "Scenarios to run in parallel")->check(CLI::Range(1u, 256u));
  batch->add_option("--json", json_out, "Write one JSON record per run to this file");
  ov_batch.add_to(batch);

  auto* trace = app.add_subcommand("trace-dump", "Run one scenario and print its per-slot trace");
  trace->add_option("scenario", file, "Scenario file")->required()->check(CLI::ExistingFile);
  trace->add_option("--out,-o", trace_out, "Write the trace here instead of stdout");
  ov_trace.add_to(trace);

  auto* topo = app.add_subcommand("topology-check", "Print connectivity, capacity bound and disjoint paths");
  topo->add_option("scenario", file, "Scenario file")->required()->check(CLI::ExistingFile);
  ov_topo.add_to(topo);

  auto* render = app.add_subcommand("render", "Print the scenario with every default filled in");
  render->add_option("scenario", file, "Scenario file")->required()->check(CLI::ExistingFile);
  ov_render.add_to(render);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(file, ov_run, json_out);
    if (*batch) return cmd_batch(files, ov_batch, seeds, jobs, json_out);
    if (*trace) return cmd_trace(file, ov_trace, trace_out);
    if (*topo) return cmd_topology(file, ov_topo);
    if (*render) return cmd_render(file, ov_render);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
