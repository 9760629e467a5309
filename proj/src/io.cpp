#include "gmmdeploy/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gmmdeploy/render.hpp"

namespace gmmdeploy {

using nlohmann::json;

namespace fs = std::filesystem;

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

json component_json(const GaussianComponent& c) {
  return json{{"weight", c.weight},
              {"mean", {c.mean.x(), c.mean.y()}},
              {"cov", {{c.cov(0, 0), c.cov(0, 1)}, {c.cov(1, 0), c.cov(1, 1)}}}};
}

json parse_or_throw(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

json mc_json(const McKld& m) {
  return json{{"value", m.value}, {"std_error", m.std_error}, {"samples", m.samples},
              {"floored", m.floored}};
}

}  // namespace

std::string mixture_json(int agent, const Mixture& m, const std::string& run_id) {
  json doc;
  doc["agent"] = agent;
  doc["run_id"] = run_id;
  doc["components"] = json::array();
  for (const auto& c : m.components) doc["components"].push_back(component_json(c));
  return doc.dump(2) + "\n";
}

Mixture parse_mixture_json(const std::string& text) {
  const json doc = parse_or_throw(text, "mixture");
  Mixture m;
  try {
    for (const auto& cj : doc.at("components")) {
      GaussianComponent c;
      c.weight = cj.at("weight").get<double>();
      c.mean = Vec2(cj.at("mean").at(0).get<double>(), cj.at("mean").at(1).get<double>());
      for (int r = 0; r < 2; ++r) {
        for (int col = 0; col < 2; ++col) c.cov(r, col) = cj.at("cov").at(r).at(col).get<double>();
      }
      m.components.push_back(c);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mixture: ") + e.what());
  }
  return m;
}

std::string plan_json(const AssignmentPlan& plan, const std::string& run_id) {
  json doc = json::object();
  for (std::size_t i = 0; i < plan.region_of_agent.size(); ++i) {
    doc[std::to_string(i)] = plan.region_of_agent[i];
  }
  doc["run_id"] = run_id;
  return doc.dump(2) + "\n";
}

AssignmentPlan parse_plan_json(const std::string& text, int agents) {
  const json doc = parse_or_throw(text, "plan");
  AssignmentPlan plan;
  try {
    for (int i = 0; i < agents; ++i) plan.region_of_agent.push_back(doc.at(std::to_string(i)).get<int>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  }
  if (!plan.is_bijection()) throw ConfigError("plan: not a bijection");
  return plan;
}

std::string costs_csv(const MatrixXd& costs) {
  std::string out = "agent";
  for (int k = 0; k < costs.cols(); ++k) out += ",region" + std::to_string(k);
  out += "\n";
  for (int i = 0; i < costs.rows(); ++i) {
    out += std::to_string(i);
    for (int k = 0; k < costs.cols(); ++k) out += "," + format_number(costs(i, k));
    out += "\n";
  }
  return out;
}

std::string trajectories_csv(const std::vector<UnicycleTrajectory>& trajectories) {
  std::string out = "agent,t,x,y,heading,speed,u1,u2\n";
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    for (const auto& s : trajectories[i].samples) {
      out += std::to_string(i) + "," + format_number(s.t) + "," + format_number(s.state.position.x()) +
             "," + format_number(s.state.position.y()) + "," + format_number(s.state.heading) + "," +
             format_number(s.state.speed) + "," + format_number(s.input.x()) + "," +
             format_number(s.input.y()) + "\n";
    }
  }
  return out;
}

std::string metrics_json(const RunReport& r) {
  const Metrics& m = r.metrics;
  json doc;
  doc["run_id"] = r.run_id;
  doc["seed"] = r.seed;
  doc["mc_kld_pre"] = mc_json(m.pre);
  doc["mc_kld_post"] = mc_json(m.post);
  doc["mc_kld_truth_post"] = mc_json(m.truth_post);
  doc["mc_kld_truth_estimate"] = mc_json(m.truth_estimate);
  doc["consensus_residual"] = m.consensus_residual;
  doc["agreement_spread"] = m.agreement_spread;
  doc["assignment_value"] = m.assignment_value;
  doc["simplex_rounds"] = m.simplex_rounds;
  doc["min_speed"] = m.min_speed;
  doc["plan"] = r.assignment.plan.region_of_agent;
  return doc.dump(2) + "\n";
}

ConsensusTraceWriter::ConsensusTraceWriter()
    : text_("loop,component,stream,round,node,y0,y1,y2,y3\n") {}

EmTrace ConsensusTraceWriter::callback() {
  return [this](int loop, int component, Stream stream, int round,
                std::span<const ConsensusState> states) {
    for (std::size_t i = 0; i < states.size(); ++i) {
      text_ += std::to_string(loop) + "," + std::to_string(component) + "," + stream_name(stream) +
               "," + std::to_string(round) + "," + std::to_string(i);
      const VectorXd& y = states[i].y;
      for (int d = 0; d < 4; ++d) text_ += "," + (d < y.size() ? format_number(y(d)) : std::string());
      text_ += "\n";
    }
  };
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("failed writing " + path.string());
}

void write_estimates(const fs::path& dir, const std::vector<Mixture>& estimates,
                     const std::string& run_id) {
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    write_text(dir / ("gmm_agent" + std::to_string(i) + ".json"),
               mixture_json(static_cast<int>(i), estimates[i], run_id));
  }
}

std::vector<Mixture> read_estimates(const fs::path& dir, int agents) {
  std::vector<Mixture> out;
  for (int i = 0; i < agents; ++i) {
    out.push_back(parse_mixture_json(read_text(dir / ("gmm_agent" + std::to_string(i) + ".json"))));
  }
  return out;
}

void write_report(const fs::path& dir, const Scenario& s, const RunReport& r) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "metrics.json", metrics_json(r));
  write_text(dir / "plan.json", plan_json(r.assignment.plan, r.run_id));
  write_estimates(dir, r.stage1.em.estimates, r.run_id);
  write_text(dir / "costs.csv", costs_csv(r.assignment.costs));
  write_text(dir / "trajectories.csv", trajectories_csv(r.transport.trajectories));
  write_text(dir / "estimate.svg",
             render_estimate_svg(s.arena, r.stage1.targets, r.stage1.em.estimates.at(0)));
  std::vector<ServiceProfile> profiles;
  for (const auto& a : s.agents) profiles.push_back(a.profile);
  write_text(dir / "qos.svg", render_qos_svg(s.arena, collective_qos(r.transport.final_poses, profiles),
                                             r.transport.final_poses));
}

}  // namespace gmmdeploy
