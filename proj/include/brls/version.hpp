#pragma once

#include <Eigen/Core>

namespace brls {

inline constexpr const char* version = "0.1.0";

inline constexpr int eigen_world = EIGEN_WORLD_VERSION;
inline constexpr int eigen_major = EIGEN_MAJOR_VERSION;
inline constexpr int eigen_minor = EIGEN_MINOR_VERSION;

}  // namespace brls
