#include "commute/pipeline.hpp"
#include "commute/synth.hpp"
#include "commute/text_io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct Overrides
{
  std::optional<std::string> seed;
  std::optional<std::int64_t> n;
  std::optional<std::string> snap_legs;
  bool strict = false;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
};

void add_run_flags(CLI::App* cmd, std::string& config, Overrides& o)
{
  cmd->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed (unsigned 64-bit)");
  cmd->add_option("--n", o.n, "Simulated trip total (default: observed total)");
  cmd->add_option("--snap-legs", o.snap_legs, "Add snap legs to distances")->check(CLI::IsMember({"on", "off"}));
  cmd->add_flag("--strict", o.strict, "Treat margin mismatches as errors");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  cmd->add_option("--out", o.out, "Output directory");
}

commute::RunConfig resolve_config(const std::string& path, const Overrides& o)
{
  commute::RunConfig c = commute::load_run_config(path);
  if (o.seed) {
    const auto s = commute::text::parse_uint(*o.seed);
    if (!s) throw std::invalid_argument("--seed must be an unsigned 64-bit integer");
    c.seed = *s;
  }
  if (o.n) {
    if (*o.n <= 0) throw std::invalid_argument("--n must be positive");
    c.n = *o.n;
  }
  if (o.snap_legs) c.snap_legs = *o.snap_legs == "on" ? commute::SnapLegs::on : commute::SnapLegs::off;
  if (o.strict) c.strict = true;
  if (o.threads) c.threads = *o.threads;
  if (o.out) c.out = *o.out;
  return c;
}

int fail(const std::string& stage, const std::optional<std::filesystem::path>& out_dir, const std::string& message,
         const std::vector<commute::Finding>& findings = {})
{
  const std::string body = commute::error_report_json(stage, message, findings);
  if (out_dir) {
    try {
      commute::text::write_file(*out_dir / "error_report.json", body);
    } catch (const std::exception&) {
      // stderr still carries the report
    }
  }
  std::cerr << body;
  return 1;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Disaggregate zone-level commuting flows into network-measured trips and analyse them"};
  app.require_subcommand(1);

  std::string synth_config;
  std::optional<std::string> synth_seed;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset directory");
  synth->add_option("--config", synth_config, "Scenario config (JSON)")->check(CLI::ExistingFile);
  synth->add_option("--seed", synth_seed, "Override the scenario seed");
  synth->add_option("--out", synth_out, "Dataset directory")->required();

  std::string sim_config;
  Overrides sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate and measure trips");
  add_run_flags(simulate, sim_config, sim);

  std::string ana_config;
  Overrides ana;
  std::optional<std::string> ana_trips;
  auto* analyze = app.add_subcommand("analyze", "Compute metrics, regressions and flag tests");
  add_run_flags(analyze, ana_config, ana);
  analyze->add_option("--trips", ana_trips, "Measured trips (default: <out>/trips.csv)")->check(CLI::ExistingFile);

  std::string rep_dir;
  auto* report = app.add_subcommand("report", "Summarise a run directory");
  report->add_option("--out", rep_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

  std::vector<std::string> cmp_runs;
  std::vector<std::string> cmp_labels;
  std::optional<std::string> cmp_crosswalk;
  std::string cmp_out;
  auto* compare = app.add_subcommand("compare", "Join zone metrics across runs via a crosswalk");
  compare->add_option("runs", cmp_runs, "Run directories")->required()->check(CLI::ExistingDirectory);
  compare->add_option("--labels", cmp_labels, "Column label per run (default: directory names)");
  compare->add_option("--crosswalk", cmp_crosswalk, "child_id,parent_id table")->check(CLI::ExistingFile);
  compare->add_option("--out", cmp_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  std::optional<std::filesystem::path> out_dir;
  std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (*synth) {
      out_dir = synth_out;
      commute::synth::ScenarioConfig c;
      if (!synth_config.empty()) c = commute::synth::config_from_json(commute::text::read_file(synth_config));
      if (synth_seed) {
        const auto s = commute::text::parse_uint(*synth_seed);
        if (!s) throw std::invalid_argument("--seed must be an unsigned 64-bit integer");
        c.seed = *s;
      }
      const auto scenario = commute::synth::generate_scenario(c);
      commute::synth::write_scenario(synth_out, scenario);
      std::cout << "wrote " << scenario.zones.size() << " zones, " << scenario.od.total() << " commuters, "
                << scenario.network.node_count() << " nodes to " << synth_out << "\n";
    } else if (*simulate) {
      const auto c = resolve_config(sim_config, sim);
      out_dir = c.out;
      const auto r = commute::run_simulate(c);
      std::cout << "simulated " << r.measured.trips.trips.size() << " trips ("
                << r.measured.counters.dijkstra_runs << " dijkstra runs, " << r.measured.counters.unreachable_trips
                << " unreachable) into " << c.out.string() << "\n";
    } else if (*analyze) {
      const auto c = resolve_config(ana_config, ana);
      out_dir = c.out;
      std::optional<std::filesystem::path> trips;
      if (ana_trips) trips = *ana_trips;
      commute::run_analyze(c, trips);
      std::cout << "wrote reports to " << c.out.string() << "\n";
    } else if (*report) {
      std::cout << commute::report(rep_dir);
    } else if (*compare) {
      out_dir = cmp_out;
      std::vector<std::filesystem::path> dirs(cmp_runs.begin(), cmp_runs.end());
      std::vector<std::string> labels = cmp_labels;
      if (labels.empty()) {
        for (const auto& d : dirs) labels.push_back(std::filesystem::path(d).lexically_normal().filename().string());
      }
      const commute::Crosswalk cw = cmp_crosswalk ? commute::load_crosswalk(*cmp_crosswalk) : commute::Crosswalk{};
      commute::text::write_file(std::filesystem::path(cmp_out) / "compare.csv",
                                commute::compare_runs(dirs, labels, cw));
      std::cout << "wrote " << (std::filesystem::path(cmp_out) / "compare.csv").string() << "\n";
    }
  } catch (const commute::DataError& e) {
    return fail(stage, out_dir, e.what(), e.findings());
  } catch (const std::exception& e) {
    return fail(stage, out_dir, e.what());
  }
  return 0;
}
