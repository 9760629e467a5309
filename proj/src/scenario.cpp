#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "gmmdeploy/simulator.hpp"

namespace gmmdeploy {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("scenario: " + where + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

Vec2 vec2(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(where, "expected [x, y]");
  return {number(j[0], where), number(j[1], where)};
}

Mat2 mat2(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(where, "expected [[a, b], [c, d]]");
  Mat2 m;
  for (int r = 0; r < 2; ++r) {
    const Vec2 row = vec2(j[r], where);
    m(r, 0) = row(0);
    m(r, 1) = row(1);
  }
  return m;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::vector<int> Scenario::active_agents() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (agents[i].active) out.push_back(i);
  }
  return out;
}

bool Scenario::has_quotas() const {
  for (const auto& a : agents) {
    if (a.quota) return true;
  }
  return false;
}

Scenario parse_scenario(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("document", "expected an object");

  Scenario s;
  s.name = doc.value("name", std::string("scenario"));
  const json& seed = require(doc, "seed", "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    fail("seed", "expected a nonnegative integer");
  }
  s.seed = seed.get<std::uint64_t>();

  const json& arena = require(doc, "arena", "arena");
  s.arena.min = vec2(require(arena, "min", "arena.min"), "arena.min");
  s.arena.max = vec2(require(arena, "max", "arena.max"), "arena.max");
  if (!(s.arena.max.array() > s.arena.min.array()).all()) fail("arena", "max must exceed min");

  const json& truth = require(doc, "truth", "truth");
  if (!truth.is_array() || truth.empty()) fail("truth", "expected a non-empty array of components");
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const std::string where = "truth[" + std::to_string(k) + "]";
    GaussianComponent c;
    c.weight = number(require(truth[k], "weight", where), where + ".weight");
    c.mean = vec2(require(truth[k], "mean", where), where + ".mean");
    c.cov = mat2(require(truth[k], "cov", where), where + ".cov");
    s.truth.components.push_back(c);
  }
  try {
    validate_mixture(s.truth);
  } catch (const std::invalid_argument& e) {
    fail("truth", e.what());
  }

  const json& m = require(doc, "num_targets", "num_targets");
  if (!m.is_number_integer() || m.get<long long>() < 0) fail("num_targets", "expected integer >= 0");
  s.num_targets = m.get<int>();

  const json& adj = require(doc, "adjacency", "adjacency");
  if (!adj.is_array()) fail("adjacency", "expected an array of rows");
  Eigen::MatrixXi a(static_cast<int>(adj.size()), static_cast<int>(adj.size()));
  for (std::size_t r = 0; r < adj.size(); ++r) {
    if (!adj[r].is_array() || adj[r].size() != adj.size()) fail("adjacency", "matrix must be square");
    for (std::size_t c = 0; c < adj.size(); ++c) {
      if (!adj[r][c].is_number_integer()) fail("adjacency", "entries must be integers");
      a(static_cast<int>(r), static_cast<int>(c)) = adj[r][c].get<int>();
    }
  }
  try {
    s.graph = Graph(a);
  } catch (const std::invalid_argument& e) {
    fail("adjacency", e.what());
  }

  if (doc.contains("params")) {
    const json& p = doc.at("params");
    if (!p.is_object()) fail("params", "expected an object");
    auto get_int = [&](const char* key, int& out) {
      if (!p.contains(key)) return;
      if (!p.at(key).is_number_integer()) fail(std::string("params.") + key, "expected an integer");
      out = p.at(key).get<int>();
    };
    auto get_num = [&](const char* key, double& out) {
      if (p.contains(key)) out = number(p.at(key), std::string("params.") + key);
    };
    get_int("L", s.params.rounds);
    get_int("T", s.params.loops);
    get_num("delta_c", s.params.delta_c);
    get_num("eta_scale", s.params.eta_scale);
    get_num("tau", s.params.tau);
    get_num("dt", s.params.dt);
    get_num("v_star", s.params.v_star);
    get_num("v_min", s.params.v_min);
    get_int("mc_samples", s.params.mc_samples);
  }
  const auto& P = s.params;
  if (P.rounds < 1 || P.loops < 1) fail("params", "L and T must be at least 1");
  if (!(P.delta_c > 0.0)) fail("params.delta_c", "must be positive");
  if (!(P.tau > 0.0)) fail("params.tau", "must be positive");
  if (!(P.dt > 0.0) || P.dt > P.tau / 100.0 * (1.0 + 1e-12)) {
    fail("params.dt", "must be in (0, tau/100]");
  }
  if (!(P.v_star > 0.0)) fail("params.v_star", "must be positive");
  if (!(P.v_min > 0.0)) fail("params.v_min", "must be positive");
  if (P.mc_samples < 2) fail("params.mc_samples", "need at least 2 samples");

  const json& agents = require(doc, "agents", "agents");
  if (!agents.is_array() || agents.empty()) fail("agents", "expected a non-empty array");
  double total_scale = 0.0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string where = "agents[" + std::to_string(i) + "]";
    const json& aj = agents[i];
    AgentSpec spec;
    spec.initial.position = vec2(require(aj, "position", where), where + ".position");
    spec.initial.heading = number(require(aj, "heading", where), where + ".heading");
    spec.initial.speed = aj.contains("speed") ? number(aj.at("speed"), where + ".speed") : 1.0;
    spec.profile.scale = number(require(aj, "scale", where), where + ".scale");
    spec.profile.sigma_x = number(require(aj, "sigma_x", where), where + ".sigma_x");
    spec.profile.sigma_y = number(require(aj, "sigma_y", where), where + ".sigma_y");
    spec.active = aj.value("active", false);
    if (aj.contains("quota") && !aj.at("quota").is_null()) {
      if (!aj.at("quota").is_number_integer() || aj.at("quota").get<int>() < 0) {
        fail(where + ".quota", "expected integer >= 0");
      }
      if (!spec.active) fail(where + ".quota", "only active agents detect targets");
      spec.quota = aj.at("quota").get<int>();
    }
    if (!(spec.profile.scale > 0.0)) fail(where + ".scale", "must be positive");
    if (!(spec.profile.sigma_x >= spec.profile.sigma_y && spec.profile.sigma_y > 0.0)) {
      fail(where, "need sigma_x >= sigma_y > 0");
    }
    if (std::abs(spec.initial.speed) < P.v_min) fail(where + ".speed", "below v_min");
    total_scale += spec.profile.scale;
    s.agents.push_back(spec);
  }
  for (auto& a : s.agents) a.profile.rel_weight = a.profile.scale / total_scale;

  if (s.graph.size() != s.size()) {
    fail("adjacency", "graph has " + std::to_string(s.graph.size()) + " nodes but there are " +
                          std::to_string(s.size()) + " agents");
  }
  if (!is_connected(s.graph)) fail("adjacency", "communication graph is disconnected");
  const auto active = s.active_agents();
  if (active.empty()) fail("agents", "at least one agent must be active");
  if (s.num_targets < s.size()) {
    fail("num_targets", "need at least as many targets as mixture components (agents)");
  }
  if (s.has_quotas()) {
    int sum = 0;
    for (int i : active) {
      if (!s.agents[i].quota) fail("agents", "either every active agent has a quota or none does");
      sum += *s.agents[i].quota;
    }
    if (sum != s.num_targets) {
      fail("agents", "quotas sum to " + std::to_string(sum) + " but num_targets is " +
                         std::to_string(s.num_targets));
    }
  }

  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(doc.dump(), fnv1a(std::to_string(s.seed)))));
  s.run_id = buf;
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace gmmdeploy
