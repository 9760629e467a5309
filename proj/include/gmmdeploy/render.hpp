#pragma once

#include <span>
#include <string>

#include "gmmdeploy/simulator.hpp"

namespace gmmdeploy {

/// Targets plus the 3-sigma ellipses of an estimate; stroke width follows
/// the component weight.
std::string render_estimate_svg(const Arena& arena, std::span<const Vec2> targets,
                                const Mixture& estimate);

/// Heatmap of a QoS mixture over the arena with agent markers.
std::string render_qos_svg(const Arena& arena, const Mixture& qos, std::span<const Pose> agents,
                           int cells = 80);

}  // namespace gmmdeploy
