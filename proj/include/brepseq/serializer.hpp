#pragma once

#include <string>
#include <vector>

#include "brepseq/config.hpp"
#include "brepseq/model.hpp"

namespace brepseq {

enum class Special { Sos = 0, Eos, FaceStart, LoopStart, Line, Arc, Complex };
inline constexpr int kSpecialCount = 7;

/// Global token-id layout: COORD q -> q, CURVE c -> coord_count + c, then
/// the seven specials.
struct Vocabulary {
  int coord_count = 1024;
  int curve_count = 256;

  static Vocabulary from(const Config& c) { return {c.quant_levels(), c.codebook_size}; }

  int size() const { return coord_count + curve_count + kSpecialCount; }
  int coord(int q) const { return q; }
  int curve(int c) const { return coord_count + c; }
  int special(Special s) const { return coord_count + curve_count + static_cast<int>(s); }

  bool is_coord(int id) const { return id >= 0 && id < coord_count; }
  bool is_curve(int id) const { return id >= coord_count && id < coord_count + curve_count; }
  bool is(int id, Special s) const { return id == special(s); }
  int edge_token(EdgeKind k) const;

  /// Human-readable token, e.g. "COORD(512)" or "FACE_START".
  std::string describe(int id) const;
};

using TokenSequence = std::vector<int>;

/// Reassigns vertex ids by (z, y, x) qpos order, orients and rotates every
/// loop, orders inner loops and faces. Requires qpos on every vertex.
WireframeModel canonical_order(const WireframeModel& model);

/// Tokens of one face: FACE_START then, per loop, LOOP_START and interleaved
/// vertex / edge-type / payload tokens with implicit closure.
TokenSequence serialize_face(const Face& face, const WireframeModel& model,
                             const Config& config = {});

/// SOS + faces + EOS. Expects a canonical-ordered model whose complex edges
/// carry curve tokens; throws when the result exceeds max_seq_len.
TokenSequence serialize_model(const WireframeModel& model, const Config& config = {});

/// Token file: {"tokens":[...]}.
std::string tokens_to_json(const TokenSequence& tokens);
TokenSequence tokens_from_json(const std::string& text);

}  // namespace brepseq
