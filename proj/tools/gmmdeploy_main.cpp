#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "gmmdeploy/io.hpp"
#include "gmmdeploy/simulator.hpp"

namespace fs = std::filesystem;
using namespace gmmdeploy;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
}

void summarize(const RunReport& r) {
  std::printf("run %s seed %llu\n", r.run_id.c_str(), static_cast<unsigned long long>(r.seed));
  std::printf("plan:");
  for (std::size_t i = 0; i < r.assignment.plan.region_of_agent.size(); ++i) {
    std::printf(" %zu->%d", i, r.assignment.plan.region_of_agent[i]);
  }
  std::printf("\nassignment value %.6f (%d simplex rounds)\n", r.metrics.assignment_value,
              r.metrics.simplex_rounds);
  std::printf("kld pre %.6f +- %.6f, post %.6f +- %.6f\n", r.metrics.pre.value,
              r.metrics.pre.std_error, r.metrics.post.value, r.metrics.post.std_error);
  std::printf("consensus residual %.3g, agreement spread %.3g, min speed %.4f\n",
              r.metrics.consensus_residual, r.metrics.agreement_spread, r.metrics.min_speed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage distributed deployment of heterogeneous service agents"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  std::string gmm_dir;
  std::string plan_path;
  bool trace = false;
  bool shared = false;
  int mc_samples = 0;

  auto* run = app.add_subcommand("run", "Full pipeline: estimate, assign, transport, metrics");
  run->add_option("scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_flag("--trace", trace, "Write consensus_trace.csv");
  run->add_flag("--shared-estimate", shared, "Price every row from agent 0's estimate");
  run->add_option("--mc-samples", mc_samples, "Monte-Carlo samples for the KLD metrics")
      ->check(CLI::Range(2, 100000000));

  auto* stage1 = app.add_subcommand("stage1", "Distributed EM only; writes gmm_agent<i>.json");
  stage1->add_option("scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  stage1->add_option("--out", out_dir, "Output directory")->required();
  stage1->add_flag("--trace", trace, "Write consensus_trace.csv");

  auto* assign = app.add_subcommand("assign", "Costs and distributed simplex from stored estimates");
  assign->add_option("scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  assign->add_option("--gmm-dir", gmm_dir, "Directory with gmm_agent<i>.json")
      ->required()
      ->check(CLI::ExistingDirectory);
  assign->add_option("--out", out_dir, "Output directory")->required();
  assign->add_flag("--shared-estimate", shared, "Price every row from agent 0's estimate");

  auto* transport = app.add_subcommand("transport", "Transport agents along a stored plan");
  transport->add_option("scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  transport->add_option("--gmm-dir", gmm_dir, "Directory with gmm_agent<i>.json")
      ->required()
      ->check(CLI::ExistingDirectory);
  transport->add_option("--plan", plan_path, "plan.json")->required()->check(CLI::ExistingFile);
  transport->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const Scenario s = load_scenario(scenario_path);
    ensure_dir(out_dir);
    const fs::path out(out_dir);

    if (run->parsed()) {
      PipelineOptions opt;
      opt.shared_estimate = shared;
      if (mc_samples > 0) opt.mc_samples = mc_samples;
      ConsensusTraceWriter writer;
      if (trace) opt.em_trace = writer.callback();
      const RunReport r = run_pipeline(s, opt);
      write_report(out, s, r);
      if (trace) write_text(out / "consensus_trace.csv", writer.text());
      summarize(r);
    } else if (stage1->parsed()) {
      ConsensusTraceWriter writer;
      const Stage1Result r = run_stage1(s, trace ? writer.callback() : EmTrace{});
      write_estimates(out, r.em.estimates, s.run_id);
      if (trace) write_text(out / "consensus_trace.csv", writer.text());
      std::printf("wrote %d estimates to %s\n", s.size(), out.string().c_str());
    } else if (assign->parsed()) {
      const auto estimates = read_estimates(gmm_dir, s.size());
      const AssignmentStage r = run_assignment(s, estimates, shared);
      write_text(out / "costs.csv", costs_csv(r.costs));
      write_text(out / "plan.json", plan_json(r.plan, s.run_id));
      std::printf("assignment value %.6f (%d simplex rounds)\n", r.value, r.simplex.rounds);
    } else if (transport->parsed()) {
      const auto estimates = read_estimates(gmm_dir, s.size());
      const AssignmentPlan plan = parse_plan_json(read_text(plan_path), s.size());
      const TransportStage r = run_transport(s, estimates, plan);
      write_text(out / "trajectories.csv", trajectories_csv(r.trajectories));
      std::printf("wrote %d trajectories to %s\n", s.size(), out.string().c_str());
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  }
  return kOk;
}
