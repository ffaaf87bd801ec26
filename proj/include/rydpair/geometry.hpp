#pragma once

#include "rydpair/fields.hpp"
#include "rydpair/species.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rydpair {

/// Rotation about y taking lab-frame vectors into the frame whose z axis is
/// the interatomic axis, which lies in the lab xz plane at angle theta to z.
Eigen::Matrix3d field_rotation_matrix(double theta);
Eigen::Vector3d rotate_field(const Eigen::Vector3d &lab, double theta);
FieldConfig rotate_fields(const FieldConfig &lab, double theta);

/// Throws ConfigError unless 0 <= theta <= pi.
void check_interaction_angle(double theta);
/// Throws ConfigError if a field has a y component: only the xz plane is supported.
void require_xz_plane(const FieldConfig &lab);

struct RotatedComponent {
  StateOne state;
  double coefficient = 0.0;
};

/// |n l j mj>_lab = sum_mj' d^j_{mj mj'}(theta) |n l j mj'>_calc.
std::vector<RotatedComponent> rotate_state(const StateOne &lab, double theta);

/// Matrix D with D(i, k) = coefficient of basis[i] (calc) in basis[k] (lab).
/// Components outside the basis are dropped.
Eigen::MatrixXd rotation_matrix(const std::vector<StateOne> &basis, double theta);

} // namespace rydpair
