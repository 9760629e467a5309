#include "gmmdeploy/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace gmmdeploy {

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

struct Canvas {
  const Arena& arena;
  double pad;

  double width() const { return arena.max.x() - arena.min.x() + 2 * pad; }
  double height() const { return arena.max.y() - arena.min.y() + 2 * pad; }

  std::string open() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + num(width()) + " " +
           num(height()) + "\" width=\"800\" height=\"" + num(800.0 * height() / width()) +
           "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           // world coordinates, y up
           "<g transform=\"translate(" +
           num(pad - arena.min.x()) + " " + num(height() - pad + arena.min.y()) +
           ") scale(1 -1)\">\n";
  }

  static std::string close() { return "</g>\n</svg>\n"; }
};

std::string heat_colour(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 * (1.0 - 0.85 * t)));
  const int g = static_cast<int>(std::lround(255 * (1.0 - 0.6 * t)));
  const int b = static_cast<int>(std::lround(255 * (1.0 - 0.15 * t)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string render_estimate_svg(const Arena& arena, std::span<const Vec2> targets,
                                const Mixture& estimate) {
  const double unit = arena.scale() / 400.0;
  const Canvas c{arena, 20 * unit};
  std::string out = c.open();
  out += "<g fill=\"#555\">\n";
  for (const Vec2& t : targets) {
    out += "<circle cx=\"" + num(t.x()) + "\" cy=\"" + num(t.y()) + "\" r=\"" + num(unit) + "\"/>\n";
  }
  out += "</g>\n<g fill=\"none\" stroke=\"#c0392b\">\n";
  for (const auto& comp : estimate.components) {
    if (!(comp.weight > 0.0)) continue;
    const AxisForm<double> ax = axes_from_cov(comp.cov);
    const double deg = ax.theta * 180.0 / std::numbers::pi;
    out += "<ellipse cx=\"" + num(comp.mean.x()) + "\" cy=\"" + num(comp.mean.y()) + "\" rx=\"" +
           num(3.0 * std::sqrt(ax.sigma_major)) + "\" ry=\"" + num(3.0 * std::sqrt(ax.sigma_minor)) +
           "\" transform=\"rotate(" + num(deg) + " " + num(comp.mean.x()) + " " +
           num(comp.mean.y()) + ")\" stroke-width=\"" + num(unit * (0.5 + 12.0 * comp.weight)) +
           "\"/>\n";
  }
  out += "</g>\n";
  out += Canvas::close();
  return out;
}

std::string render_qos_svg(const Arena& arena, const Mixture& qos, std::span<const Pose> agents,
                           int cells) {
  if (cells < 1) throw std::invalid_argument("render_qos_svg: cells must be positive");
  const double unit = arena.scale() / 400.0;
  const Canvas c{arena, 20 * unit};
  const double wx = (arena.max.x() - arena.min.x()) / cells;
  const double wy = (arena.max.y() - arena.min.y()) / cells;
  std::vector<double> density(static_cast<std::size_t>(cells) * cells);
  double peak = 0.0;
  for (int j = 0; j < cells; ++j) {
    for (int i = 0; i < cells; ++i) {
      const Vec2 x(arena.min.x() + (i + 0.5) * wx, arena.min.y() + (j + 0.5) * wy);
      const double d = mixture_pdf(qos, x);
      density[static_cast<std::size_t>(j) * cells + i] = d;
      peak = std::max(peak, d);
    }
  }
  std::string out = c.open();
  out += "<g shape-rendering=\"crispEdges\">\n";
  for (int j = 0; j < cells; ++j) {
    for (int i = 0; i < cells; ++i) {
      const double d = density[static_cast<std::size_t>(j) * cells + i];
      out += "<rect x=\"" + num(arena.min.x() + i * wx) + "\" y=\"" + num(arena.min.y() + j * wy) +
             "\" width=\"" + num(wx) + "\" height=\"" + num(wy) + "\" fill=\"" +
             heat_colour(peak > 0.0 ? d / peak : 0.0) + "\"/>\n";
    }
  }
  out += "</g>\n<g stroke=\"black\" fill=\"#f1c40f\">\n";
  for (const Pose& p : agents) {
    const Vec2 tip = p.position + 8 * unit * Vec2(std::cos(p.heading), std::sin(p.heading));
    out += "<circle cx=\"" + num(p.position.x()) + "\" cy=\"" + num(p.position.y()) + "\" r=\"" +
           num(3 * unit) + "\" stroke-width=\"" + num(0.6 * unit) + "\"/>\n";
    out += "<line x1=\"" + num(p.position.x()) + "\" y1=\"" + num(p.position.y()) + "\" x2=\"" +
           num(tip.x()) + "\" y2=\"" + num(tip.y()) + "\" stroke-width=\"" + num(unit) + "\"/>\n";
  }
  out += "</g>\n";
  out += Canvas::close();
  return out;
}

}  // namespace gmmdeploy
