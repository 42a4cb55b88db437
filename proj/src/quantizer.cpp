#include "brepseq/quantizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <set>

#include "brepseq/error.hpp"
#include "rng.hpp"

namespace brepseq {

// ---------------------------------------------------------------------------
// Coordinate grid
// ---------------------------------------------------------------------------

int quantize_coord(double x, int bits) {
  if (std::isnan(x)) throw Error(ErrorCode::kInvalidArgument, "cannot quantize NaN");
  const int max_q = (1 << bits) - 1;
  if (std::abs(x) > 1.0 + 1e-9) warn("coordinate " + std::to_string(x) + " outside [-1,1] clamped");
  x = std::clamp(x, -1.0, 1.0);
  const double scaled = (x + 1.0) * max_q / 2.0;
  return std::clamp(static_cast<int>(std::floor(scaled + 0.5)), 0, max_q);
}

double dequantize_coord(int q, int bits) {
  const int max_q = (1 << bits) - 1;
  if (q < 0 || q > max_q)
    throw Error(ErrorCode::kInvalidArgument, "quantized index " + std::to_string(q) + " out of range");
  return 2.0 * q / max_q - 1.0;
}

QPos quantize_point(const Vec3& p, int bits) {
  return {quantize_coord(p.x, bits), quantize_coord(p.y, bits), quantize_coord(p.z, bits)};
}

Vec3 dequantize_point(const QPos& q, int bits) {
  return {dequantize_coord(q[0], bits), dequantize_coord(q[1], bits), dequantize_coord(q[2], bits)};
}

QuantizedModel quantize_vertices(const WireframeModel& model, int bits) {
  QuantizedModel result;
  const std::size_t n = model.vertices.size();
  std::vector<QPos> q(n);
  std::map<QPos, int> survivor_of_cell;
  std::vector<int> survivor(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = quantize_point(model.vertices[i].position, bits);
    auto [it, inserted] = survivor_of_cell.emplace(q[i], static_cast<int>(i));
    survivor[i] = it->second;
  }
  std::vector<int> remap(n, -1);
  WireframeModel& out = result.model;
  out.metadata = model.metadata;
  for (std::size_t i = 0; i < n; ++i) {
    if (survivor[i] != static_cast<int>(i)) continue;
    remap[i] = static_cast<int>(out.vertices.size());
    out.vertices.push_back({model.vertices[i].position, q[i]});
  }
  for (std::size_t i = 0; i < n; ++i) remap[i] = remap[static_cast<std::size_t>(survivor[i])];
  result.merged = static_cast<int>(n - out.vertices.size());

  out.faces = model.faces;
  for (std::size_t f = 0; f < out.faces.size(); ++f) {
    for (std::size_t l = 0; l < out.faces[f].loops.size(); ++l) {
      Loop& loop = out.faces[f].loops[l];
      const Loop& original = model.faces[f].loops[l];
      for (auto& e : loop.entries) e.vertex = remap[static_cast<std::size_t>(e.vertex)];
      const std::size_t m = loop.entries.size();
      for (std::size_t k = 0; k < m; ++k) {
        const auto [a, b] = loop.edge_endpoints(k);
        if (a == b)
          result.conflicts.push_back({QuantizeConflict::Kind::ZeroLengthEdge, static_cast<int>(f),
                                      static_cast<int>(l), static_cast<int>(k)});
        for (std::size_t j = 0; j < k; ++j) {
          const bool collapsed = loop.entries[j].vertex == loop.entries[k].vertex &&
                                 original.entries[j].vertex != original.entries[k].vertex;
          const bool adjacent = j + 1 == k || (j == 0 && k + 1 == m);
          if (collapsed && !adjacent)
            result.conflicts.push_back({QuantizeConflict::Kind::DuplicateLoopVertex,
                                        static_cast<int>(f), static_cast<int>(l),
                                        static_cast<int>(k)});
        }
        Edge& edge = loop.entries[k].edge;
        if (edge.kind == EdgeKind::Complex && !edge.samples.empty()) {
          edge.samples.front() = out.vertices[static_cast<std::size_t>(a)].position;
          edge.samples.back() = out.vertices[static_cast<std::size_t>(b)].position;
        }
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Edge geometry
// ---------------------------------------------------------------------------

Circle arc_from_three_points(const Vec3& a, const Vec3& mid, const Vec3& b) {
  const Vec3 u = mid - a;
  const Vec3 w = b - a;
  const Vec3 n = cross(u, w);
  const double n2 = squared_norm(n);
  if (std::sqrt(n2) * 0.5 <= 1e-12)
    throw Error(ErrorCode::kGeometry, "collinear arc points");
  const Vec3 center = a + (cross(n, u) * squared_norm(w) + cross(w, n) * squared_norm(u)) / (2.0 * n2);
  return {center, distance(center, a), n / std::sqrt(n2)};
}

std::vector<Vec3> sample_arc(const Vec3& a, const Vec3& mid, const Vec3& b, int count) {
  if (norm(cross(mid - a, b - a)) * 0.5 <= 1e-12) {
    // Degenerate arc: polyline through the midpoint.
    std::vector<Vec3> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const double t = 2.0 * i / (count - 1);
      out[static_cast<std::size_t>(i)] = t <= 1.0 ? lerp(a, mid, t) : lerp(mid, b, t - 1.0);
    }
    return out;
  }
  const Circle c = arc_from_three_points(a, mid, b);
  const Vec3 e1 = (a - c.center) / c.radius;
  const Vec3 e2 = cross(c.normal, e1);
  const Vec3 rb = b - c.center;
  double sweep = std::atan2(dot(rb, e2), dot(rb, e1));
  if (sweep <= 0.0) sweep += 2.0 * std::numbers::pi;
  std::vector<Vec3> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = sweep * i / (count - 1);
    out[static_cast<std::size_t>(i)] = c.center + (e1 * std::cos(t) + e2 * std::sin(t)) * c.radius;
  }
  out.front() = a;
  out.back() = b;
  return out;
}

namespace {

std::vector<Vec3> resample_polyline_by_index(std::span<const Vec3> pts, int count) {
  std::vector<Vec3> out(static_cast<std::size_t>(count));
  const double last = static_cast<double>(pts.size() - 1);
  for (int i = 0; i < count; ++i) {
    const double s = last * i / (count - 1);
    const auto k = std::min(static_cast<std::size_t>(s), pts.size() - 2);
    out[static_cast<std::size_t>(i)] = lerp(pts[k], pts[k + 1], s - static_cast<double>(k));
  }
  return out;
}

}  // namespace

std::vector<Vec3> sample_edge_points(const Edge& edge, const Vec3& start, const Vec3& end, int count) {
  switch (edge.kind) {
    case EdgeKind::Line: {
      std::vector<Vec3> out(static_cast<std::size_t>(count));
      for (int i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] = lerp(start, end, static_cast<double>(i) / (count - 1));
      out.back() = end;
      return out;
    }
    case EdgeKind::Arc:
      if (!edge.mid) throw Error(ErrorCode::kGeometry, "arc edge without midpoint");
      return sample_arc(start, *edge.mid, end, count);
    case EdgeKind::Complex:
      if (edge.samples.size() < 2) throw Error(ErrorCode::kGeometry, "complex edge without samples");
      if (static_cast<int>(edge.samples.size()) == count) return edge.samples;
      return resample_polyline_by_index(edge.samples, count);
  }
  return {};
}

std::vector<Vec3> sample_loop_edge(const WireframeModel& model, const Loop& loop, std::size_t k,
                                   int count) {
  const auto [a, b] = loop.edge_endpoints(k);
  return sample_edge_points(loop.entries[k].edge, model.vertices[static_cast<std::size_t>(a)].position,
                            model.vertices[static_cast<std::size_t>(b)].position, count);
}

// ---------------------------------------------------------------------------
// Codebook
// ---------------------------------------------------------------------------

void Codebook::validate() const {
  if (levels <= 0 || size <= 0 || dim <= 0)
    throw Error(ErrorCode::kInvalidArgument, "codebook: non-positive shape");
  if (codes.size() != static_cast<std::size_t>(size) * static_cast<std::size_t>(dim))
    throw Error(ErrorCode::kInvalidArgument, "codebook: code matrix size mismatch");
  for (double c : codes)
    if (!std::isfinite(c)) throw Error(ErrorCode::kInvalidArgument, "codebook: non-finite code");
}

namespace {

constexpr char kMagic[4] = {'R', 'Q', 'C', 'B'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(raw), std::end(raw));
  out.insert(out.end(), std::begin(raw), std::end(raw));
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error(ErrorCode::kSchema, "codebook file truncated");
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(raw), std::end(raw));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

}  // namespace

std::vector<std::uint8_t> Codebook::to_bytes() const {
  validate();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(levels));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(size));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
  put_le<std::uint64_t>(out, seed);
  for (double c : codes) put_le<double>(out, c);
  return out;
}

Codebook Codebook::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(ErrorCode::kSchema, "codebook file: bad magic");
  std::size_t pos = 4;
  Codebook book;
  book.levels = static_cast<int>(get_le<std::uint32_t>(bytes, pos));
  book.size = static_cast<int>(get_le<std::uint32_t>(bytes, pos));
  book.dim = static_cast<int>(get_le<std::uint32_t>(bytes, pos));
  book.seed = get_le<std::uint64_t>(bytes, pos);
  if (book.levels <= 0 || book.size <= 0 || book.dim <= 0 || book.size > (1 << 20) || book.dim > 4096)
    throw Error(ErrorCode::kSchema, "codebook file: implausible header");
  const std::size_t count = static_cast<std::size_t>(book.size) * static_cast<std::size_t>(book.dim);
  book.codes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) book.codes.push_back(get_le<double>(bytes, pos));
  if (pos != bytes.size()) throw Error(ErrorCode::kSchema, "codebook file: trailing bytes");
  book.validate();
  return book;
}

void Codebook::save(const std::string& path) const {
  const auto bytes = to_bytes();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write codebook " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

Codebook Codebook::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read codebook " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_bytes(bytes);
}

namespace {

double sq_dist(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Nearest code; ties go to the lowest index.
int nearest_code(const double* r, const Codebook& book) {
  int best = 0;
  double best_d = sq_dist(r, book.codes.data(), book.dim);
  for (int k = 1; k < book.size; ++k) {
    const double d = sq_dist(r, book.codes.data() + static_cast<std::size_t>(k) * book.dim, book.dim);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

std::vector<double> flatten(std::span<const Vec3> samples) {
  std::vector<double> flat;
  flat.reserve(samples.size() * 3);
  for (const auto& p : samples) {
    flat.push_back(p.x);
    flat.push_back(p.y);
    flat.push_back(p.z);
  }
  return flat;
}

}  // namespace

Codebook fit_curve_codebook(std::span<const std::vector<Vec3>> curves, std::uint64_t seed,
                            const CodebookFitOptions& options) {
  if (curves.empty()) throw Error(ErrorCode::kInvalidArgument, "codebook fit: empty corpus");
  const int dim = options.points_per_segment * 3;
  Codebook book;
  book.levels = options.levels;
  book.size = options.size;
  book.dim = dim;
  book.seed = seed;
  book.codes.assign(static_cast<std::size_t>(book.size) * dim, 0.0);

  std::vector<double> data;
  for (const auto& c : curves) {
    if (c.size() % static_cast<std::size_t>(options.points_per_segment) != 0)
      throw Error(ErrorCode::kInvalidArgument, "codebook fit: curve length not a segment multiple");
    const auto flat = flatten(c);
    data.insert(data.end(), flat.begin(), flat.end());
  }
  const std::size_t count = data.size() / static_cast<std::size_t>(dim);
  auto row = [&](std::size_t i) { return data.data() + i * static_cast<std::size_t>(dim); };
  auto code = [&](int k) { return book.codes.data() + static_cast<std::size_t>(k) * dim; };

  // Few enough distinct segments: one code each is a zero-distortion fixed point.
  {
    std::vector<std::size_t> distinct;
    const std::vector<double> zero(static_cast<std::size_t>(dim), 0.0);
    for (std::size_t i = 0; i < count && distinct.size() < static_cast<std::size_t>(book.size); ++i) {
      if (std::equal(row(i), row(i) + dim, zero.begin())) continue;
      bool seen = false;
      for (std::size_t j : distinct) seen = seen || std::equal(row(i), row(i) + dim, row(j));
      if (!seen) distinct.push_back(i);
    }
    if (distinct.size() < static_cast<std::size_t>(book.size)) {
      for (std::size_t k = 0; k < distinct.size(); ++k)
        std::copy(row(distinct[k]), row(distinct[k]) + dim, code(static_cast<int>(k) + 1));
      return book;
    }
  }

  // Level-wise seeding: each level gets its own share of codes 1..size-1,
  // k-means++ seeded and refined on that level's residuals. Code 0 stays zero.
  SplitMix rng(seed);
  std::vector<double> work = data;
  auto wrow = [&](std::size_t i) { return work.data() + i * static_cast<std::size_t>(dim); };
  std::vector<double> d2(count);
  bool padded = false;
  int first = 1;
  for (int level = 0; level < book.levels; ++level) {
    const int last = 1 + (book.size - 1) * (level + 1) / book.levels;
    for (std::size_t i = 0; i < count; ++i) {
      d2[i] = sq_dist(wrow(i), code(0), dim);
      for (int k = 1; k < first; ++k) d2[i] = std::min(d2[i], sq_dist(wrow(i), code(k), dim));
    }
    for (int k = first; k < last; ++k) {
      double total = 0.0;
      for (double d : d2) total += d;
      if (total > 0.0) {
        double target = rng.uniform() * total;
        std::size_t pick = count - 1;
        for (std::size_t i = 0; i < count; ++i) {
          target -= d2[i];
          if (target < 0.0 && d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
        while (d2[pick] == 0.0 && pick > 0) --pick;
        std::copy(wrow(pick), wrow(pick) + dim, code(k));
      } else {
        // Fewer distinct segments than codes: perturbed duplicates.
        padded = true;
        const std::size_t pick = static_cast<std::size_t>(rng.next() % count);
        for (int c = 0; c < dim; ++c) code(k)[c] = wrow(pick)[c] + 1e-3 * rng.normal();
      }
      for (std::size_t i = 0; i < count; ++i) d2[i] = std::min(d2[i], sq_dist(wrow(i), code(k), dim));
    }
    // Short Lloyd pass restricted to this level's codes.
    std::vector<int> owner(count);
    for (int iter = 0; iter < 10; ++iter) {
      std::vector<double> acc(static_cast<std::size_t>(last - first) * dim, 0.0);
      std::vector<std::size_t> n(static_cast<std::size_t>(last - first), 0);
      for (std::size_t i = 0; i < count; ++i) {
        int best = 0;
        double bd = sq_dist(wrow(i), code(0), dim);
        for (int k = 1; k < last; ++k) {
          const double d = sq_dist(wrow(i), code(k), dim);
          if (d < bd) {
            bd = d;
            best = k;
          }
        }
        owner[i] = best;
        if (best < first) continue;
        const std::size_t slot = static_cast<std::size_t>(best - first);
        for (int c = 0; c < dim; ++c) acc[slot * dim + static_cast<std::size_t>(c)] += wrow(i)[c];
        ++n[slot];
      }
      for (int k = first; k < last; ++k) {
        const std::size_t slot = static_cast<std::size_t>(k - first);
        if (n[slot] == 0) continue;
        for (int c = 0; c < dim; ++c) code(k)[c] = acc[slot * dim + static_cast<std::size_t>(c)] / static_cast<double>(n[slot]);
      }
    }
    for (std::size_t i = 0; i < count; ++i) {
      const int k = nearest_code(wrow(i), book);
      for (int c = 0; c < dim; ++c) wrow(i)[c] -= code(k)[c];
    }
    first = last;
  }
  if (padded)
    warn("codebook fit: corpus has fewer distinct segments than codes; padded with perturbed duplicates");

  // Lloyd iterations over the pooled residual inputs of every level.
  const std::size_t assignments = count * static_cast<std::size_t>(book.levels);
  std::vector<int> assign(assignments, -1), previous;
  std::vector<double> sums(book.codes.size());
  std::vector<std::size_t> members(static_cast<std::size_t>(book.size));
  std::vector<double> residual(static_cast<std::size_t>(dim));
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(members.begin(), members.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
      std::copy(row(i), row(i) + dim, residual.begin());
      for (int level = 0; level < book.levels; ++level) {
        const int k = nearest_code(residual.data(), book);
        assign[i * static_cast<std::size_t>(book.levels) + static_cast<std::size_t>(level)] = k;
        double* s = sums.data() + static_cast<std::size_t>(k) * dim;
        for (int c = 0; c < dim; ++c) s[c] += residual[static_cast<std::size_t>(c)];
        ++members[static_cast<std::size_t>(k)];
        for (int c = 0; c < dim; ++c) residual[static_cast<std::size_t>(c)] -= code(k)[c];
      }
    }
    if (assign == previous) break;
    previous = assign;
    for (int k = 1; k < book.size; ++k) {
      const std::size_t m = members[static_cast<std::size_t>(k)];
      if (m == 0) continue;
      for (int c = 0; c < dim; ++c)
        code(k)[c] = sums[static_cast<std::size_t>(k) * dim + static_cast<std::size_t>(c)] / static_cast<double>(m);
    }
  }
  return book;
}

std::vector<int> rq_encode_curve(std::span<const Vec3> samples, const Codebook& book) {
  const auto flat = flatten(samples);
  if (flat.size() % static_cast<std::size_t>(book.dim) != 0)
    throw Error(ErrorCode::kInvalidArgument, "curve length is not a multiple of the segment size");
  const std::size_t segments = flat.size() / static_cast<std::size_t>(book.dim);
  std::vector<int> tokens;
  tokens.reserve(segments * static_cast<std::size_t>(book.levels));
  std::vector<double> r(static_cast<std::size_t>(book.dim));
  for (std::size_t s = 0; s < segments; ++s) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(s * book.dim),
              flat.begin() + static_cast<std::ptrdiff_t>((s + 1) * book.dim), r.begin());
    for (int level = 0; level < book.levels; ++level) {
      const int k = nearest_code(r.data(), book);
      tokens.push_back(k);
      const auto c = book.code(k);
      for (int i = 0; i < book.dim; ++i) r[static_cast<std::size_t>(i)] -= c[static_cast<std::size_t>(i)];
    }
  }
  return tokens;
}

std::vector<Vec3> rq_decode_curve(std::span<const int> tokens, const Codebook& book, int use_levels) {
  if (tokens.size() % static_cast<std::size_t>(book.levels) != 0)
    throw Error(ErrorCode::kInvalidArgument, "curve token count is not a multiple of the level count");
  const int levels = use_levels < 0 ? book.levels : std::min(use_levels, book.levels);
  const std::size_t segments = tokens.size() / static_cast<std::size_t>(book.levels);
  std::vector<double> flat(segments * static_cast<std::size_t>(book.dim), 0.0);
  for (std::size_t s = 0; s < segments; ++s) {
    for (int level = 0; level < book.levels; ++level) {
      const int t = tokens[s * static_cast<std::size_t>(book.levels) + static_cast<std::size_t>(level)];
      if (t < 0 || t >= book.size)
        throw Error(ErrorCode::kInvalidArgument, "curve token " + std::to_string(t) + " out of codebook range");
      if (level >= levels) continue;
      const auto c = book.code(t);
      for (int i = 0; i < book.dim; ++i) flat[s * static_cast<std::size_t>(book.dim) + static_cast<std::size_t>(i)] += c[static_cast<std::size_t>(i)];
    }
  }
  std::vector<Vec3> out(flat.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = {std::clamp(flat[3 * i], -1.0, 1.0), std::clamp(flat[3 * i + 1], -1.0, 1.0),
              std::clamp(flat[3 * i + 2], -1.0, 1.0)};
  return out;
}

std::vector<Vec3> canonicalize_curve(std::span<const Vec3> samples) {
  if (samples.size() < 2) throw Error(ErrorCode::kGeometry, "curve needs at least two samples");
  return canonicalize_curve(samples, samples.back() - samples.front());
}

std::vector<Vec3> canonicalize_curve(std::span<const Vec3> samples, const Vec3& frame_chord) {
  if (samples.size() < 2) throw Error(ErrorCode::kGeometry, "curve needs at least two samples");
  if (norm(samples.back() - samples.front()) <= 1e-12 || norm(frame_chord) <= 1e-12)
    throw Error(ErrorCode::kGeometry, "closed curve has no chord");
  const Vec3 mid = (samples.front() + samples.back()) * 0.5;
  const Mat3 r = shortest_arc_rotation({1, 0, 0}, frame_chord).transposed();
  std::vector<Vec3> out(samples.size());
  double max_abs = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out[i] = r * (samples[i] - mid);
    max_abs = std::max({max_abs, std::abs(out[i].x), std::abs(out[i].y), std::abs(out[i].z)});
  }
  for (auto& p : out) p = p / max_abs;
  return out;
}

std::vector<Vec3> align_decoded_curve(std::span<const Vec3> canonical, const Vec3& target_start,
                                      const Vec3& target_end) {
  if (canonical.size() < 2) throw Error(ErrorCode::kGeometry, "curve needs at least two samples");
  const Vec3 target_chord = target_end - target_start;
  const double target_len = norm(target_chord);
  if (target_len < kMinEdgeLength)
    throw Error(ErrorCode::kGeometry, "edge below resolution (" + std::to_string(target_len) + ")");
  const Vec3 chord = canonical.back() - canonical.front();
  const double len = norm(chord);
  if (len <= 1e-12) throw Error(ErrorCode::kGeometry, "decoded curve has a degenerate chord");
  const double scale = target_len / len;
  const Mat3 r = shortest_arc_rotation(chord, target_chord);
  std::vector<Vec3> out(canonical.size());
  for (std::size_t i = 0; i < canonical.size(); ++i)
    out[i] = target_start + (r * (canonical[i] - canonical.front())) * scale;
  out.front() = target_start;
  out.back() = target_end;
  return out;
}

bool canonical_direction(const QPos& a, const QPos& b) {
  // x first keeps every chord within 90 degrees of +x, away from the
  // shortest-arc singularity at -x.
  return std::tie(a[0], a[1], a[2]) <= std::tie(b[0], b[1], b[2]);
}

namespace {

template <typename Fn>
void for_each_complex(const WireframeModel& model, Fn&& fn) {
  for (std::size_t f = 0; f < model.faces.size(); ++f)
    for (std::size_t l = 0; l < model.faces[f].loops.size(); ++l) {
      const Loop& loop = model.faces[f].loops[l];
      for (std::size_t k = 0; k < loop.entries.size(); ++k)
        if (loop.entries[k].edge.kind == EdgeKind::Complex) fn(f, l, k);
    }
}

std::vector<Vec3> canonical_curve_of(const WireframeModel& model, const Loop& loop, std::size_t k) {
  const auto [a, b] = loop.edge_endpoints(k);
  const auto& qa = model.vertices[static_cast<std::size_t>(a)].qpos;
  const auto& qb = model.vertices[static_cast<std::size_t>(b)].qpos;
  if (!qa || !qb) throw Error(ErrorCode::kInvalidArgument, "complex edge encoding needs quantized vertices");
  std::vector<Vec3> samples = loop.entries[k].edge.samples;
  const bool forward = canonical_direction(*qa, *qb);
  if (!forward) std::reverse(samples.begin(), samples.end());
  // Frame from the quantized chord, which is all the decoder sees.
  const QPos& from = forward ? *qa : *qb;
  const QPos& to = forward ? *qb : *qa;
  const Vec3 chord{static_cast<double>(to[0] - from[0]), static_cast<double>(to[1] - from[1]),
                   static_cast<double>(to[2] - from[2])};
  if (norm(chord) == 0.0) return canonicalize_curve(samples);
  return canonicalize_curve(samples, chord);
}

}  // namespace

WireframeModel encode_complex_edges(const WireframeModel& model, const Codebook& book) {
  book.validate();
  WireframeModel out = model;
  for_each_complex(model, [&](std::size_t f, std::size_t l, std::size_t k) {
    const Loop& loop = model.faces[f].loops[l];
    out.faces[f].loops[l].entries[k].edge.curve_tokens = rq_encode_curve(canonical_curve_of(model, loop, k), book);
  });
  return out;
}

std::vector<std::vector<Vec3>> collect_canonical_curves(const WireframeModel& model) {
  std::vector<std::vector<Vec3>> out;
  std::set<std::vector<double>> seen;
  for_each_complex(model, [&](std::size_t f, std::size_t l, std::size_t k) {
    auto curve = canonical_curve_of(model, model.faces[f].loops[l], k);
    std::vector<double> key;
    for (const auto& p : curve) key.insert(key.end(), {p.x, p.y, p.z});
    if (seen.insert(std::move(key)).second) out.push_back(std::move(curve));
  });
  return out;
}

}  // namespace brepseq
