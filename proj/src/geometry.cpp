#include "rydpair/geometry.hpp"

#include "rydpair/angular.hpp"
#include "rydpair/errors.hpp"
#include "rydpair/units.hpp"

#include <cmath>
#include <map>

namespace rydpair {

Eigen::Matrix3d field_rotation_matrix(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix3d r;
  r << c, 0, -s, 0, 1, 0, s, 0, c;
  return r;
}

Eigen::Vector3d rotate_field(const Eigen::Vector3d &lab, double theta) { return field_rotation_matrix(theta) * lab; }

FieldConfig rotate_fields(const FieldConfig &lab, double theta) {
  FieldConfig calc = lab;
  calc.efield_v_per_m = rotate_field(lab.efield_v_per_m, theta);
  calc.bfield_tesla = rotate_field(lab.bfield_tesla, theta);
  return calc;
}

void check_interaction_angle(double theta) {
  if (!(theta >= 0.0 && theta <= units::pi)) throw ConfigError("interaction angle must lie in [0, 180] degrees");
}

void require_xz_plane(const FieldConfig &lab) {
  if (lab.efield_v_per_m.y() != 0.0 || lab.bfield_tesla.y() != 0.0) {
    throw ConfigError("fields must lie in the xz plane that contains the interatomic axis; general azimuthal "
                      "geometries need the full rotation matrix D and are not supported");
  }
}

std::vector<RotatedComponent> rotate_state(const StateOne &lab, double theta) {
  lab.validate();
  std::vector<RotatedComponent> out;
  for (int tm = -lab.j.twice(); tm <= lab.j.twice(); tm += 2) {
    const auto mp = HalfInteger::from_twice(tm);
    const double d = wigner_d(lab.j, lab.mj, mp, theta);
    if (d == 0.0) continue;
    StateOne s = lab;
    s.mj = mp;
    out.push_back({s, d});
  }
  return out;
}

Eigen::MatrixXd rotation_matrix(const std::vector<StateOne> &basis, double theta) {
  std::map<StateOne, Eigen::Index> index;
  for (std::size_t i = 0; i < basis.size(); ++i) index.emplace(basis[i], static_cast<Eigen::Index>(i));
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (const auto &c : rotate_state(basis[k], theta)) {
      const auto it = index.find(c.state);
      if (it != index.end()) d(it->second, k) = c.coefficient;
    }
  }
  return d;
}

} // namespace rydpair
