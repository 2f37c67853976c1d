#include "sants/action.hpp"

#include <algorithm>
#include <cmath>

#include "sants/config.hpp"

namespace sants {

ActionChunk::ActionChunk(std::vector<ActionStep> steps) : steps_(std::move(steps)) {
    for (auto& s : steps_) {
        const double n = s.orientation.norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw NumericFault("action chunk: degenerate quaternion");
        s.orientation /= n;
        if (!std::isfinite(s.gripper)) throw NumericFault("action chunk: non-finite gripper");
        s.gripper = std::clamp(s.gripper, 0.0, 1.0);
    }
}

double quaternion_angle(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
    const double dot = std::min(1.0, std::abs(a.dot(b)));
    return 2.0 * std::acos(dot);
}

Eigen::Vector4d quaternion_from_rotation_vector(const Eigen::Vector3d& w) {
    const double angle = w.norm();
    if (angle < 1e-12) return {1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z()};
    const Eigen::Vector3d axis = w / angle;
    const double s = std::sin(0.5 * angle);
    return {std::cos(0.5 * angle), s * axis.x(), s * axis.y(), s * axis.z()};
}

}  // namespace sants
