#include "brepseq/geometry.hpp"

#include <algorithm>

#include "brepseq/error.hpp"

namespace brepseq {

Mat3 shortest_arc_rotation(const Vec3& from, const Vec3& to) {
  const Vec3 a = normalized(from);
  const Vec3 b = normalized(to);
  const double c = dot(a, b);
  if (c < -1.0 + 1e-12) {
    // Half turn about an axis perpendicular to the line through a and -a.
    int pick = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(a[i]) < std::abs(a[pick])) pick = i;
    Vec3 e{};
    e[pick] = 1.0;
    const Vec3 k = normalized(cross(a, e));
    return {{2 * k.x * k.x - 1, 2 * k.x * k.y, 2 * k.x * k.z, 2 * k.y * k.x, 2 * k.y * k.y - 1,
             2 * k.y * k.z, 2 * k.z * k.x, 2 * k.z * k.y, 2 * k.z * k.z - 1}};
  }
  // Rodrigues: I + [v]x + [v]x^2 / (1 + c)
  const Vec3 v = cross(a, b);
  const double f = 1.0 / (1.0 + c);
  return {{1 - f * (v.y * v.y + v.z * v.z), -v.z + f * v.x * v.y, v.y + f * v.x * v.z,
           v.z + f * v.x * v.y, 1 - f * (v.x * v.x + v.z * v.z), -v.x + f * v.y * v.z,
           -v.y + f * v.x * v.z, v.x + f * v.y * v.z, 1 - f * (v.x * v.x + v.y * v.y)}};
}

SimilarityTransform unit_cube_transform(const Aabb& box) {
  if (box.empty()) throw Error(ErrorCode::kGeometry, "degenerate model: no points");
  const Vec3 ext = box.extent();
  const double longest = std::max({ext.x, ext.y, ext.z});
  if (!(longest > 0.0)) throw Error(ErrorCode::kGeometry, "degenerate model: zero extent");
  SimilarityTransform t;
  t.scale = 2.0 / longest;
  t.offset = -(box.center() * t.scale);
  // Avoid -0.0 so an already-normalized input yields a bitwise identity.
  for (int i = 0; i < 3; ++i)
    if (t.offset[i] == 0.0) t.offset[i] = 0.0;
  return t;
}

}  // namespace brepseq
