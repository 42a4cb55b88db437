#include "brepseq/grammar.hpp"

#include <algorithm>

#include "brepseq/error.hpp"

namespace brepseq {

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::Start: return "Start";
    case Phase::AwaitFace: return "AwaitFace";
    case Phase::AwaitLoop: return "AwaitLoop";
    case Phase::InVertex: return "InVertex";
    case Phase::AwaitEdgeType: return "AwaitEdgeType";
    case Phase::InArcMid: return "InArcMid";
    case Phase::InCurve: return "InCurve";
    case Phase::EdgeComplete: return "EdgeComplete";
    case Phase::Done: return "Done";
  }
  return "?";
}

Grammar::Grammar(const Config& config) : config_(config), vocab_(Vocabulary::from(config)) {
  config_.validate();
}

namespace {

void open_loop(GrammarState& s) {
  ++s.loop;
  s.entity = 0;
  s.vertices = 0;
  s.phase = Phase::InVertex;
  s.sub = 0;
}

void open_face(GrammarState& s) {
  ++s.face;
  s.loop = 0;
  s.entity = 0;
  s.vertices = 0;
  s.phase = Phase::AwaitLoop;
  s.sub = 0;
}

}  // namespace

bool Grammar::step(const GrammarState& s, int token, GrammarState& n) const {
  n = s;
  n.tokens = s.tokens + 1;
  const bool coord = vocab_.is_coord(token);
  switch (s.phase) {
    case Phase::Start:
      if (!vocab_.is(token, Special::Sos)) return false;
      n.phase = Phase::AwaitFace;
      return true;
    case Phase::AwaitFace:
      if (!vocab_.is(token, Special::FaceStart) || s.face >= config_.max_faces) return false;
      open_face(n);
      return true;
    case Phase::AwaitLoop:
      if (!vocab_.is(token, Special::LoopStart) || s.loop >= config_.max_loops) return false;
      open_loop(n);
      return true;
    case Phase::InVertex:
      if (!coord) return false;
      if (s.sub == 0) {
        ++n.entity;
        ++n.vertices;
      }
      n.sub = s.sub + 1;
      if (n.sub == 3) {
        n.phase = Phase::AwaitEdgeType;
        n.sub = 0;
      }
      return true;
    case Phase::AwaitEdgeType:
      ++n.entity;
      n.sub = 0;
      if (vocab_.is(token, Special::Line)) {
        n.edge = EdgeKind::Line;
        n.phase = Phase::EdgeComplete;
      } else if (vocab_.is(token, Special::Arc)) {
        n.edge = EdgeKind::Arc;
        n.phase = Phase::InArcMid;
      } else if (vocab_.is(token, Special::Complex)) {
        n.edge = EdgeKind::Complex;
        n.phase = Phase::InCurve;
      } else {
        return false;
      }
      return true;
    case Phase::InArcMid:
      if (!coord) return false;
      n.sub = s.sub + 1;
      if (n.sub == 3) {
        n.phase = Phase::EdgeComplete;
        n.sub = 0;
      }
      return true;
    case Phase::InCurve:
      if (!vocab_.is_curve(token)) return false;
      n.sub = s.sub + 1;
      if (n.sub == config_.curve_tokens) {
        n.phase = Phase::EdgeComplete;
        n.sub = 0;
      }
      return true;
    case Phase::EdgeComplete:
      if (coord) {
        if (s.entity + 2 > config_.max_entities) return false;
        ++n.entity;
        ++n.vertices;
        n.phase = Phase::InVertex;
        n.sub = 1;
        return true;
      }
      if (s.vertices < 2) return false;
      if (vocab_.is(token, Special::LoopStart)) {
        if (s.loop >= config_.max_loops) return false;
        open_loop(n);
        return true;
      }
      if (vocab_.is(token, Special::FaceStart)) {
        if (s.face >= config_.max_faces) return false;
        open_face(n);
        return true;
      }
      if (vocab_.is(token, Special::Eos)) {
        n.phase = Phase::Done;
        n.sub = 0;
        return true;
      }
      return false;
    case Phase::Done:
      return false;
  }
  return false;
}

int Grammar::min_tokens_to_finish(const GrammarState& s) const {
  const int counted = s.vertices + ((s.phase == Phase::InVertex && s.sub == 0) ? 1 : 0);
  const int need = std::max(0, 2 - counted) * 4;
  switch (s.phase) {
    case Phase::Start: return 12;
    case Phase::AwaitFace: return 11;
    case Phase::AwaitLoop: return 10;
    case Phase::InVertex: return (3 - s.sub) + 1 + need + 1;
    case Phase::AwaitEdgeType: return 1 + need + 1;
    case Phase::InArcMid: return (3 - s.sub) + need + 1;
    case Phase::InCurve: return (config_.curve_tokens - s.sub) + need + 1;
    case Phase::EdgeComplete: return need + 1;
    case Phase::Done: return 0;
  }
  return 0;
}

bool Grammar::accepts(const GrammarState& state, int token) const {
  GrammarState next;
  if (!step(state, token, next)) return false;
  return next.tokens + min_tokens_to_finish(next) <= config_.max_seq_len;
}

GrammarState Grammar::advance(const GrammarState& state, int token) const {
  GrammarState next;
  if (!step(state, token, next) || next.tokens + min_tokens_to_finish(next) > config_.max_seq_len)
    throw GrammarError(state.tokens, valid_ids(state),
                       "unexpected " + vocab_.describe(token) + " at position " +
                           std::to_string(state.tokens) + " (state " + to_string(state.phase) + ")");
  return next;
}

void Grammar::fill_mask(const GrammarState& state, std::span<std::uint8_t> mask) const {
  if (static_cast<int>(mask.size()) != vocab_.size())
    throw Error(ErrorCode::kInvalidArgument, "mask size must equal the vocabulary size");
  std::fill(mask.begin(), mask.end(), std::uint8_t{0});
  // Every id inside the COORD or CURVE range leads to the same successor.
  if (accepts(state, vocab_.coord(0)))
    std::fill_n(mask.begin(), vocab_.coord_count, std::uint8_t{1});
  if (accepts(state, vocab_.curve(0)))
    std::fill_n(mask.begin() + vocab_.coord_count, vocab_.curve_count, std::uint8_t{1});
  for (int s = 0; s < kSpecialCount; ++s) {
    const int id = vocab_.special(static_cast<Special>(s));
    if (accepts(state, id)) mask[static_cast<std::size_t>(id)] = 1;
  }
}

std::vector<std::uint8_t> Grammar::valid_next_mask(const GrammarState& state) const {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(vocab_.size()));
  fill_mask(state, mask);
  return mask;
}

std::vector<int> Grammar::valid_ids(const GrammarState& state) const {
  const auto mask = valid_next_mask(state);
  std::vector<int> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(static_cast<int>(i));
  return out;
}

StructuralIndex Grammar::index_of(const GrammarState& s, int token) const {
  if (vocab_.is(token, Special::Sos) || vocab_.is(token, Special::Eos)) return {};
  if (vocab_.is(token, Special::FaceStart)) return {s.face + 1, 0, 0, 0, 0};
  if (vocab_.is(token, Special::LoopStart)) return {s.face, s.loop + 1, 0, 0, 0};
  switch (s.phase) {
    case Phase::InVertex:
      return {s.face, s.loop, 1, s.sub == 0 ? s.entity + 1 : s.entity, s.sub + 1};
    case Phase::EdgeComplete: return {s.face, s.loop, 1, s.entity + 1, 1};
    case Phase::AwaitEdgeType: return {s.face, s.loop, 2, s.entity + 1, 1};
    case Phase::InArcMid:
    case Phase::InCurve: return {s.face, s.loop, 2, s.entity, s.sub + 2};
    default: return {};
  }
}

GrammarState Grammar::run(std::span<const int> prefix) const {
  GrammarState s;
  for (int t : prefix) s = advance(s, t);
  return s;
}

std::vector<StructuralIndex> structural_indices(std::span<const int> tokens, const Config& config) {
  const Grammar g(config);
  std::vector<StructuralIndex> out;
  out.reserve(tokens.size());
  GrammarState s;
  for (int t : tokens) {
    GrammarState next = g.advance(s, t);
    out.push_back(g.index_of(s, t));
    s = next;
  }
  return out;
}

namespace {

struct PendingEntry {
  QPos q;
  EdgeKind kind = EdgeKind::Line;
  QPos mid{};
  std::vector<int> curve;
};

class Builder {
 public:
  Builder(const Codebook* book, const Config& config) : book_(book), config_(config) {}

  void open_face() {
    close_loop();
    model_.faces.emplace_back();
  }
  void open_loop() {
    close_loop();
    loop_open_ = true;
  }
  void vertex_coord(int q, int k) {
    if (k == 0) entries_.emplace_back();
    entries_.back().q[static_cast<std::size_t>(k)] = q;
  }
  void edge_type(EdgeKind kind) { entries_.back().kind = kind; }
  void mid_coord(int q, int k) { entries_.back().mid[static_cast<std::size_t>(k)] = q; }
  void curve_token(int c) { entries_.back().curve.push_back(c); }

  WireframeModel finish() {
    close_loop();
    for (auto& face : model_.faces) face.normal_hint = hint(face);
    return std::move(model_);
  }

 private:
  void close_loop() {
    if (!loop_open_) return;
    loop_open_ = false;
    Face& face = model_.faces.back();
    Loop loop;
    loop.is_outer = face.loops.empty();
    const int base = static_cast<int>(model_.vertices.size());
    for (const auto& e : entries_)
      model_.vertices.push_back({dequantize_point(e.q, config_.bits), e.q});
    const std::size_t n = entries_.size();
    for (std::size_t k = 0; k < n; ++k) {
      const PendingEntry& e = entries_[k];
      Edge edge;
      switch (e.kind) {
        case EdgeKind::Line: break;
        case EdgeKind::Arc: edge = Edge::arc(dequantize_point(e.mid, config_.bits)); break;
        case EdgeKind::Complex: {
          const QPos& a = e.q;
          const QPos& b = entries_[(k + 1) % n].q;
          edge = Edge::complex(decode(e.curve, a, b));
          edge.curve_tokens = e.curve;
          break;
        }
      }
      loop.entries.push_back({base + static_cast<int>(k), std::move(edge)});
    }
    face.loops.push_back(std::move(loop));
    entries_.clear();
  }

  std::vector<Vec3> decode(const std::vector<int>& tokens, const QPos& a, const QPos& b) const {
    if (!book_) throw Error(ErrorCode::kInvalidArgument, "complex edge requires a codebook");
    const bool forward = canonical_direction(a, b);
    const Vec3 pa = dequantize_point(forward ? a : b, config_.bits);
    const Vec3 pb = dequantize_point(forward ? b : a, config_.bits);
    std::vector<Vec3> pts;
    try {
      pts = align_decoded_curve(rq_decode_curve(tokens, *book_), pa, pb);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kGeometry) throw;
      warn(std::string("complex edge replaced by its chord: ") + err.what());
      pts.clear();
      for (int i = 0; i < config_.grid_n; ++i)
        pts.push_back(lerp(pa, pb, static_cast<double>(i) / (config_.grid_n - 1)));
    }
    if (!forward) std::reverse(pts.begin(), pts.end());
    return pts;
  }

  Vec3 hint(const Face& face) const {
    if (face.loops.empty()) return {0, 0, 1};
    Vec3 n{};
    const Loop& loop = face.loops.front();
    for (std::size_t k = 0; k < loop.entries.size(); ++k) {
      for (const Vec3& a : sample_loop_edge(model_, loop, k, 8)) pts_.push_back(a);
      pts_.pop_back();
    }
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const Vec3& a = pts_[i];
      const Vec3& b = pts_[(i + 1) % pts_.size()];
      n.x += (a.y - b.y) * (a.z + b.z);
      n.y += (a.z - b.z) * (a.x + b.x);
      n.z += (a.x - b.x) * (a.y + b.y);
    }
    pts_.clear();
    const double len = norm(n);
    return len > 0 ? n / len : Vec3{0, 0, 1};
  }

  const Codebook* book_;
  Config config_;
  WireframeModel model_;
  std::vector<PendingEntry> entries_;
  bool loop_open_ = false;
  mutable std::vector<Vec3> pts_;
};

}  // namespace

WireframeModel parse_tokens(std::span<const int> tokens, const Codebook* book, const Config& config) {
  const Grammar g(config);
  const Vocabulary& vocab = g.vocabulary();
  Builder builder(book, config);
  GrammarState s;
  for (int t : tokens) {
    const GrammarState next = g.advance(s, t);
    switch (s.phase) {
      case Phase::AwaitFace: builder.open_face(); break;
      case Phase::AwaitLoop: builder.open_loop(); break;
      case Phase::InVertex: builder.vertex_coord(t, s.sub); break;
      case Phase::AwaitEdgeType:
        builder.edge_type(next.edge);
        break;
      case Phase::InArcMid: builder.mid_coord(t, s.sub); break;
      case Phase::InCurve: builder.curve_token(t - vocab.coord_count); break;
      case Phase::EdgeComplete:
        if (vocab.is_coord(t)) builder.vertex_coord(t, 0);
        else if (vocab.is(t, Special::LoopStart)) builder.open_loop();
        else if (vocab.is(t, Special::FaceStart)) builder.open_face();
        break;
      default: break;
    }
    s = next;
  }
  if (s.phase != Phase::Done)
    throw GrammarError(s.tokens, g.valid_ids(s),
                       "sequence ended at position " + std::to_string(s.tokens) + " before EOS (state " +
                           to_string(s.phase) + ")");
  return builder.finish();
}

}  // namespace brepseq
