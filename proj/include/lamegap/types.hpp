#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace lamegap {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace lamegap
