#include "brepseq/synth.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <numbers>

#include <json.hpp>

#include "brepseq/error.hpp"
#include "brepseq/quantizer.hpp"
#include "brepseq/topology.hpp"
#include "rng.hpp"

namespace brepseq {

namespace {

constexpr double kPi = std::numbers::pi;

struct Range {
  const char* name;
  double lo;
  double hi;
  bool integer = false;
};

const std::vector<Range>& ranges(Family f) {
  static const std::map<Family, std::vector<Range>> table{
      {Family::Box, {{"sx", 0.5, 2.0}, {"sy", 0.5, 2.0}, {"sz", 0.5, 2.0}}},
      {Family::LBracket,
       {{"width", 1.0, 2.0}, {"height", 1.0, 2.0}, {"thickness", 0.15, 0.5}, {"depth", 0.3, 1.5}}},
      {Family::PlateWithHoles,
       {{"sx", 2.0, 4.0}, {"sy", 1.0, 2.0}, {"thickness", 0.1, 0.4}, {"holes", 1, 6, true},
        {"radius_ratio", 0.3, 0.7}}},
      {Family::CylinderSegment,
       {{"radius", 0.5, 1.5}, {"height", 0.3, 2.0}, {"full", 0, 1, true}, {"angle_deg", 45.0, 180.0}}},
      {Family::PrismFillet,
       {{"width", 1.0, 2.0}, {"height", 1.0, 2.0}, {"depth", 0.3, 1.5}, {"fillet_ratio", 0.2, 0.6}}},
      {Family::FreeformPlate,
       {{"sides", 2, 4, true}, {"size", 1.0, 2.0}, {"thickness", 0.1, 0.4}, {"amplitude", 0.1, 0.25}}},
  };
  return table.at(f);
}

double draw(SplitMix& rng, const Range& r) {
  if (r.integer) return std::floor(rng.uniform(r.lo, r.hi + 1.0));
  return rng.uniform(r.lo, r.hi);
}

// ---------------------------------------------------------------------------
// Extrusion of a planar profile along +z. Every family is one of these.

struct Side {
  EdgeKind kind = EdgeKind::Line;
  Vec3 mid;                 // arc midpoint (z = 0)
  std::vector<Vec3> curve;  // complex samples (z = 0)
  std::function<Vec3(double)> path;  // exact side curve, s in [0,1]
};

struct Hole {
  double cx, cy, r;
};

struct Profile {
  std::vector<Vec3> corners;  // z = 0, counter-clockwise seen from +z
  std::vector<Side> sides;    // side k runs corners[k] -> corners[k+1]
  std::vector<Hole> holes;
  double height = 1.0;
};

Vec3 at_z(const Vec3& p, double z) { return {p.x, p.y, z}; }

std::vector<Vec3> lifted(const std::vector<Vec3>& pts, double z, bool reverse) {
  std::vector<Vec3> out;
  for (const auto& p : pts) out.push_back(at_z(p, z));
  if (reverse) std::reverse(out.begin(), out.end());
  return out;
}

Edge side_edge(const Side& s, double z, bool reverse) {
  switch (s.kind) {
    case EdgeKind::Line: return Edge::line();
    case EdgeKind::Arc: return Edge::arc(at_z(s.mid, z));
    case EdgeKind::Complex: return Edge::complex(lifted(s.curve, z, reverse));
  }
  return Edge::line();
}

class Builder {
 public:
  explicit Builder(int grid_n) : n_(grid_n) {}

  int vertex(const Vec3& p) {
    out_.model.vertices.push_back({p, std::nullopt});
    return static_cast<int>(out_.model.vertices.size()) - 1;
  }

  void face(std::vector<Loop> loops, const Vec3& hint, Primitive prim,
            const std::function<Vec3(double, double)>& truth) {
    for (std::size_t l = 0; l < loops.size(); ++l) loops[l].is_outer = l == 0;
    Face f;
    f.loops = std::move(loops);
    f.normal_hint = normalized(hint);
    f.primitive = prim;
    std::vector<Vec3> grid(static_cast<std::size_t>(n_) * n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        grid[static_cast<std::size_t>(i * n_ + j)] =
            truth(static_cast<double>(i) / (n_ - 1), static_cast<double>(j) / (n_ - 1));
    out_.model.faces.push_back(std::move(f));
    out_.truth.push_back(std::move(grid));
    out_.planar.push_back(prim == Primitive::Plane);
  }

  // The untrimmed plane over the bbox of the outer loop, axes from its first side.
  void planar_face(std::vector<Loop> loops, const Vec3& hint) {
    const WireframeModel& m = out_.model;
    const Loop& outer = loops.front();
    const Vec3 o = m.vertices[static_cast<std::size_t>(outer.entries[0].vertex)].position;
    const Vec3 nn = normalized(hint);
    Vec3 e1 = m.vertices[static_cast<std::size_t>(outer.entries[1].vertex)].position - o;
    e1 = normalized(e1 - nn * dot(e1, nn));
    const Vec3 e2 = cross(nn, e1);
    double u0 = INFINITY, u1 = -INFINITY, v0 = INFINITY, v1 = -INFINITY;
    for (std::size_t k = 0; k < outer.entries.size(); ++k) {
      const auto [a, b] = outer.edge_endpoints(k);
      for (const Vec3& p : sample_edge_points(outer.entries[k].edge, m.vertices[static_cast<std::size_t>(a)].position,
                                              m.vertices[static_cast<std::size_t>(b)].position, 32)) {
        u0 = std::min(u0, dot(p - o, e1));
        u1 = std::max(u1, dot(p - o, e1));
        v0 = std::min(v0, dot(p - o, e2));
        v1 = std::max(v1, dot(p - o, e2));
      }
    }
    face(std::move(loops), hint, Primitive::Plane, [=](double s, double t) {
      return o + e1 * (u0 + (u1 - u0) * s) + e2 * (v0 + (v1 - v0) * t);
    });
  }

  SynthModel take() { return std::move(out_); }

 private:
  int n_;
  SynthModel out_;
};

Loop make_loop(std::vector<LoopEntry> entries) {
  Loop l;
  l.entries = std::move(entries);
  return l;
}

SynthModel extrude(const Profile& p, int grid_n) {
  Builder b(grid_n);
  const std::size_t k = p.corners.size();
  const double h = p.height;
  std::vector<int> bot(k), top(k);
  for (std::size_t i = 0; i < k; ++i) {
    bot[i] = b.vertex(at_z(p.corners[i], 0));
    top[i] = b.vertex(at_z(p.corners[i], h));
  }
  struct HoleIds {
    int b0, b1, t0, t1;
  };
  std::vector<HoleIds> hole_ids;
  for (const auto& hole : p.holes) {
    HoleIds ids{};
    ids.b0 = b.vertex({hole.cx + hole.r, hole.cy, 0});
    ids.b1 = b.vertex({hole.cx - hole.r, hole.cy, 0});
    ids.t0 = b.vertex({hole.cx + hole.r, hole.cy, h});
    ids.t1 = b.vertex({hole.cx - hole.r, hole.cy, h});
    hole_ids.push_back(ids);
  }
  auto hole_mid = [&](const Hole& hole, double theta, double z) {
    return Vec3{hole.cx + hole.r * std::cos(theta), hole.cy + hole.r * std::sin(theta), z};
  };

  // Caps. The bottom cap walks the profile backwards.
  for (int cap = 0; cap < 2; ++cap) {
    const double z = cap == 0 ? 0.0 : h;
    const auto& ids = cap == 0 ? bot : top;
    std::vector<LoopEntry> outer;
    if (cap == 1) {
      for (std::size_t i = 0; i < k; ++i) outer.push_back({ids[i], side_edge(p.sides[i], z, false)});
    } else {
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t from = (k - i) % k;
        const std::size_t side = (k - i - 1) % k;
        outer.push_back({ids[from], side_edge(p.sides[side], z, true)});
      }
    }
    std::vector<Loop> loops{make_loop(std::move(outer))};
    for (std::size_t j = 0; j < p.holes.size(); ++j) {
      const auto& hole = p.holes[j];
      const int a = cap == 0 ? hole_ids[j].b0 : hole_ids[j].t0;
      const int c = cap == 0 ? hole_ids[j].b1 : hole_ids[j].t1;
      loops.push_back(make_loop({{a, Edge::arc(hole_mid(hole, -kPi / 2, z))}, {c, Edge::arc(hole_mid(hole, kPi / 2, z))}}));
    }
    b.planar_face(std::move(loops), {0, 0, cap == 0 ? -1.0 : 1.0});
  }

  // Side walls.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = (i + 1) % k;
    const Side& s = p.sides[i];
    std::vector<Loop> loops{make_loop({{top[i], side_edge(s, h, false)},
                                       {top[j], Edge::line()},
                                       {bot[j], side_edge(s, 0, true)},
                                       {bot[i], Edge::line()}})};
    const Vec3 chord = p.corners[j] - p.corners[i];
    Vec3 out{chord.y, -chord.x, 0};
    if (s.kind == EdgeKind::Arc) out = s.mid - (p.corners[i] + p.corners[j]) * 0.5;
    if (norm(out) < 1e-12) out = {chord.y, -chord.x, 0};
    if (s.kind == EdgeKind::Line) {
      b.planar_face(std::move(loops), out);
    } else {
      const auto path = s.path;
      b.face(std::move(loops), out, s.kind == EdgeKind::Arc ? Primitive::Cylinder : Primitive::Complex,
             [=](double u, double t) { return at_z(path(u), t * h); });
    }
  }

  // Hole walls: two half-cylinders per hole, normals toward the axis.
  for (std::size_t j = 0; j < p.holes.size(); ++j) {
    const auto& hole = p.holes[j];
    const auto& ids = hole_ids[j];
    for (int half = 0; half < 2; ++half) {
      const double start = half == 0 ? 0.0 : kPi;
      const double mid = start + kPi / 2;
      const int ta = half == 0 ? ids.t0 : ids.t1, tb = half == 0 ? ids.t1 : ids.t0;
      const int ba = half == 0 ? ids.b0 : ids.b1, bb = half == 0 ? ids.b1 : ids.b0;
      std::vector<Loop> loops{make_loop({{ta, Edge::arc(hole_mid(hole, mid, h))},
                                         {tb, Edge::line()},
                                         {bb, Edge::arc(hole_mid(hole, mid, 0))},
                                         {ba, Edge::line()}})};
      const Vec3 inward{-std::cos(mid), -std::sin(mid), 0};
      b.face(std::move(loops), inward, Primitive::Cylinder,
             [=](double u, double t) { return hole_mid(hole, start + kPi * u, t * h); });
    }
  }
  return b.take();
}

Side line_side(const Vec3& a, const Vec3& c) {
  Side s;
  s.path = [=](double t) { return lerp(a, c, t); };
  return s;
}

// Arc from a to c around `center`, sweeping counter-clockwise by `sweep`.
Side arc_side(const Vec3& center, double radius, double theta0, double sweep) {
  Side s;
  s.kind = EdgeKind::Arc;
  const double m = theta0 + sweep / 2;
  s.mid = {center.x + radius * std::cos(m), center.y + radius * std::sin(m), 0};
  s.path = [=](double t) {
    const double th = theta0 + sweep * t;
    return Vec3{center.x + radius * std::cos(th), center.y + radius * std::sin(th), 0};
  };
  return s;
}

// Cubic bulge d(t) = t (1 - t) (c1 + c2 t) along the outward normal of a -> c.
Side cubic_side(const Vec3& a, const Vec3& c, double c1, double c2, int samples) {
  Side s;
  s.kind = EdgeKind::Complex;
  const Vec3 d = c - a;
  const Vec3 out = normalized(Vec3{d.y, -d.x, 0});
  s.path = [=](double t) { return lerp(a, c, t) + out * (t * (1 - t) * (c1 + c2 * t)); };
  for (int i = 0; i < samples; ++i) s.curve.push_back(s.path(static_cast<double>(i) / (samples - 1)));
  s.curve.front() = a;
  s.curve.back() = c;
  return s;
}

Profile polygon(const std::vector<Vec3>& corners, double height) {
  Profile p;
  p.corners = corners;
  p.height = height;
  for (std::size_t i = 0; i < corners.size(); ++i)
    p.sides.push_back(line_side(corners[i], corners[(i + 1) % corners.size()]));
  return p;
}

double param(const FamilySpec& s, const char* name) { return s.params.at(name); }

SynthModel build(const FamilySpec& s, int grid_n, std::array<int, 3>& counts) {
  switch (s.family) {
    case Family::Box: {
      const double x = param(s, "sx"), y = param(s, "sy"), z = param(s, "sz");
      counts = {8, 12, 6};
      return extrude(polygon({{0, 0, 0}, {x, 0, 0}, {x, y, 0}, {0, y, 0}}, z), grid_n);
    }
    case Family::LBracket: {
      const double w = param(s, "width"), h = param(s, "height"), t = param(s, "thickness");
      counts = {12, 18, 8};
      return extrude(polygon({{0, 0, 0}, {w, 0, 0}, {w, t, 0}, {t, t, 0}, {t, h, 0}, {0, h, 0}}, param(s, "depth")),
                     grid_n);
    }
    case Family::PlateWithHoles: {
      const double x = param(s, "sx"), y = param(s, "sy");
      const int k = static_cast<int>(param(s, "holes"));
      Profile p = polygon({{0, 0, 0}, {x, 0, 0}, {x, y, 0}, {0, y, 0}}, param(s, "thickness"));
      const double spacing = x / k;
      const double r = param(s, "radius_ratio") * std::min(spacing, y) / 2;
      for (int i = 0; i < k; ++i) p.holes.push_back({(i + 0.5) * spacing, y / 2, r});
      counts = {8 + 4 * k, 12 + 6 * k, 6 + 2 * k};
      return extrude(p, grid_n);
    }
    case Family::CylinderSegment: {
      const double r = param(s, "radius");
      Profile p;
      p.height = param(s, "height");
      const Vec3 o{0, 0, 0};
      if (param(s, "full") > 0.5) {
        p.corners = {{r, 0, 0}, {-r, 0, 0}};
        p.sides = {arc_side(o, r, 0, kPi), arc_side(o, r, kPi, kPi)};
        counts = {4, 6, 4};
      } else {
        const double a = param(s, "angle_deg") * kPi / 180;
        const Vec3 end{r * std::cos(a), r * std::sin(a), 0};
        p.corners = {o, {r, 0, 0}, end};
        p.sides = {line_side(o, {r, 0, 0}), arc_side(o, r, 0, a), line_side(end, o)};
        counts = {6, 9, 5};
      }
      return extrude(p, grid_n);
    }
    case Family::PrismFillet: {
      const double w = param(s, "width"), h = param(s, "height");
      const double f = param(s, "fillet_ratio") * std::min(w, h);
      Profile p;
      p.height = param(s, "depth");
      p.corners = {{0, 0, 0}, {w, 0, 0}, {w, h - f, 0}, {w - f, h, 0}, {0, h, 0}};
      p.sides = {line_side(p.corners[0], p.corners[1]), line_side(p.corners[1], p.corners[2]),
                 arc_side({w - f, h - f, 0}, f, 0, kPi / 2), line_side(p.corners[3], p.corners[4]),
                 line_side(p.corners[4], p.corners[0])};
      counts = {10, 15, 7};
      return extrude(p, grid_n);
    }
    case Family::FreeformPlate: {
      const int k = static_cast<int>(param(s, "sides"));
      const double size = param(s, "size"), amp = param(s, "amplitude");
      SplitMix rng(derive_seed(s.seed, 0xC0FFEE));
      Profile p;
      p.height = param(s, "thickness");
      const double phase = rng.uniform(0, 2 * kPi / std::max(k, 3));
      if (k == 2) {
        p.corners = {{-size, 0, 0}, {size, 0, 0}};
      } else {
        for (int i = 0; i < k; ++i) {
          const double th = phase + 2 * kPi * i / k;
          p.corners.push_back({size * std::cos(th), size * std::sin(th), 0});
        }
      }
      for (int i = 0; i < k; ++i) {
        const Vec3 a = p.corners[static_cast<std::size_t>(i)];
        const Vec3 c = p.corners[static_cast<std::size_t>((i + 1) % k)];
        const double len = norm(c - a);
        const double c1 = 4 * amp * len * rng.uniform(1.0, 1.5);
        const double c2 = c1 * rng.uniform(-0.8, 0.8);
        p.sides.push_back(cubic_side(a, c, c1, c2, 32));
      }
      counts = {2 * k, 3 * k, k + 2};
      return extrude(p, grid_n);
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown family");
}

}  // namespace

const char* to_string(Family f) {
  switch (f) {
    case Family::Box: return "Box";
    case Family::LBracket: return "LBracket";
    case Family::PlateWithHoles: return "PlateWithHoles";
    case Family::CylinderSegment: return "CylinderSegment";
    case Family::PrismFillet: return "PrismFillet";
    case Family::FreeformPlate: return "FreeformPlate";
  }
  return "?";
}

std::optional<Family> family_from_string(const std::string& s) {
  for (int k = 0; k < kFamilyCount; ++k)
    if (s == to_string(static_cast<Family>(k))) return static_cast<Family>(k);
  return std::nullopt;
}

FamilySpec resolve_params(const FamilySpec& spec) {
  FamilySpec out = spec;
  const auto& rs = ranges(spec.family);
  for (const auto& [name, value] : spec.params) {
    const auto it = std::find_if(rs.begin(), rs.end(), [&](const Range& r) { return name == r.name; });
    if (it == rs.end())
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("unknown parameter '") + name + "' for family " + to_string(spec.family));
    if (!(value >= it->lo && value <= it->hi) || (it->integer && value != std::floor(value)))
      throw Error(ErrorCode::kInvalidArgument, std::string("parameter '") + name + "' out of range [" +
                                                   std::to_string(it->lo) + ", " + std::to_string(it->hi) + "]");
  }
  SplitMix rng(spec.seed);
  for (const auto& r : rs) {
    double v = draw(rng, r);
    if (spec.family == Family::CylinderSegment && std::string(r.name) == "full") v = rng.uniform() < 0.75 ? 1 : 0;
    out.params.emplace(r.name, v);
  }
  if (spec.family == Family::LBracket &&
      out.params["thickness"] >= 0.8 * std::min(out.params["width"], out.params["height"]))
    throw Error(ErrorCode::kInvalidArgument, "LBracket thickness must stay below 0.8 x min(width, height)");
  return out;
}

SynthModel generate(const FamilySpec& spec, int grid_n) {
  const FamilySpec s = resolve_params(spec);
  std::array<int, 3> counts{};
  SynthModel m = build(s, grid_n, counts);
  auto& meta = m.model.metadata;
  meta["family"] = to_string(s.family);
  meta["seed"] = std::to_string(s.seed);
  meta["params"] = nlohmann::json(s.params).dump();
  meta["expected_vertices"] = std::to_string(counts[0]);
  meta["expected_edges"] = std::to_string(counts[1]);
  meta["expected_faces"] = std::to_string(counts[2]);
  return m;
}

WireframeModel generate_model(const FamilySpec& spec) { return generate(spec, 2).model; }

FamilyMix default_family_mix() { return {0.02, 0.02, 0.20, 0.30, 0.03, 0.43}; }

std::vector<FamilySpec> corpus_specs(int count, const FamilyMix& mix, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "corpus count must be at least 1");
  double total = 0;
  for (double w : mix) {
    if (!(w >= 0)) throw Error(ErrorCode::kInvalidArgument, "family weights must be non-negative");
    total += w;
  }
  if (!(total > 0)) throw Error(ErrorCode::kInvalidArgument, "family weights sum to zero");
  std::vector<FamilySpec> out;
  for (int k = 0; k < count; ++k) {
    SplitMix rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    const double pick = rng.uniform() * total;
    double acc = 0;
    int fam = kFamilyCount - 1;
    for (int f = 0; f < kFamilyCount; ++f) {
      acc += mix[static_cast<std::size_t>(f)];
      if (pick < acc && mix[static_cast<std::size_t>(f)] > 0) {
        fam = f;
        break;
      }
    }
    out.push_back({static_cast<Family>(fam), {}, rng.next()});
  }
  return out;
}

std::vector<SynthModel> generate_corpus(int count, const FamilyMix& mix, std::uint64_t seed, int grid_n) {
  std::vector<SynthModel> out;
  for (const auto& spec : corpus_specs(count, mix, seed)) out.push_back(generate(spec, grid_n));
  return out;
}

WireframeModel perturb_model(const WireframeModel& model, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be non-negative");
  if (sigma == 0) return model;
  WireframeModel out = model;
  SplitMix rng(seed);
  auto noise = [&] { return Vec3{rng.normal(), rng.normal(), rng.normal()} * sigma; };
  for (auto& v : out.vertices) {
    v.position += noise();
    v.qpos.reset();
  }
  // Each face copy of an edge is jittered on its own.
  for (auto& face : out.faces)
    for (auto& loop : face.loops)
      for (std::size_t k = 0; k < loop.entries.size(); ++k) {
        const auto [a, b] = loop.edge_endpoints(k);
        Edge& e = loop.entries[k].edge;
        e.curve_tokens.reset();
        if (e.kind == EdgeKind::Arc) e.mid = *e.mid + noise();
        if (e.kind != EdgeKind::Complex) continue;
        for (std::size_t i = 1; i + 1 < e.samples.size(); ++i) e.samples[i] += noise();
        e.samples.front() = out.vertices[static_cast<std::size_t>(a)].position;
        e.samples.back() = out.vertices[static_cast<std::size_t>(b)].position;
      }
  return out;
}

std::array<double, 3> edge_type_fractions(const std::vector<SynthModel>& corpus) {
  std::array<double, 3> counts{};
  for (const auto& m : corpus) {
    const auto norm_model = normalize_model(m.model).model;
    const auto q = quantize_vertices(norm_model);
    for (const auto& e : merge_wireframe(q.model).edges) counts[static_cast<std::size_t>(e.kind)] += 1;
  }
  const double total = counts[0] + counts[1] + counts[2];
  if (total > 0)
    for (auto& c : counts) c /= total;
  return counts;
}

std::string spec_to_json(const FamilySpec& spec) {
  return nlohmann::json{{"family", to_string(spec.family)}, {"params", spec.params}, {"seed", spec.seed}}.dump() +
         "\n";
}

FamilySpec spec_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    FamilySpec s;
    const auto fam = family_from_string(j.at("family").get<std::string>());
    if (!fam) throw Error(ErrorCode::kSchema, "spec: unknown family");
    s.family = *fam;
    if (j.contains("params")) s.params = j["params"].get<std::map<std::string, double>>();
    s.seed = j.value("seed", std::uint64_t{0});
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("spec: ") + e.what());
  }
}

}  // namespace brepseq
