#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

namespace sants {

/// One end-effector command. Orientation is a unit quaternion stored (w, x, y, z).
struct ActionStep {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector4d orientation{1.0, 0.0, 0.0, 0.0};
    double gripper = 0.0;
};

/// Fixed-length chunk of future actions. Construction normalizes every
/// quaternion and clamps gripper values to [0, 1].
class ActionChunk {
  public:
    ActionChunk() = default;
    explicit ActionChunk(std::vector<ActionStep> steps);

    std::size_t size() const { return steps_.size(); }
    const ActionStep& operator[](std::size_t t) const { return steps_[t]; }
    const std::vector<ActionStep>& steps() const { return steps_; }

    bool operator==(const ActionChunk&) const = default;

  private:
    std::vector<ActionStep> steps_;
};

/// Geodesic angle between two unit quaternions, 2 acos |<a, b>|, in [0, pi].
double quaternion_angle(const Eigen::Vector4d& a, const Eigen::Vector4d& b);

/// Unit quaternion for rotation vector `w` (axis * angle).
Eigen::Vector4d quaternion_from_rotation_vector(const Eigen::Vector3d& w);

}  // namespace sants
