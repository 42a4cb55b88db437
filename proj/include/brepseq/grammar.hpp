#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "brepseq/config.hpp"
#include "brepseq/model.hpp"
#include "brepseq/quantizer.hpp"
#include "brepseq/serializer.hpp"

namespace brepseq {

enum class Phase {
  Start,          // expects SOS
  AwaitFace,      // expects FACE_START
  AwaitLoop,      // expects LOOP_START
  InVertex,       // `sub` coordinates of the current vertex read
  AwaitEdgeType,  // expects LINE / ARC / COMPLEX
  InArcMid,       // `sub` midpoint coordinates read
  InCurve,        // `sub` curve tokens read
  EdgeComplete,   // next vertex, loop, face or EOS
  Done,
};

const char* to_string(Phase phase);

/// Hierarchical parser state after a token prefix. Plain value; copy freely.
struct GrammarState {
  Phase phase = Phase::Start;
  int sub = 0;
  int face = 0;      // faces opened so far (1-based index of the current face)
  int loop = 0;      // loops opened in the current face
  int entity = 0;    // interleaved vertex/edge ordinal of the latest entity
  int vertices = 0;  // vertices opened in the current loop
  int tokens = 0;    // tokens consumed
  EdgeKind edge = EdgeKind::Line;  // kind of the edge being read

  friend bool operator==(const GrammarState&, const GrammarState&) = default;
};

/// (I_face, I_loop, I_type, I_geom, I_intra); 0 is the null index.
struct StructuralIndex {
  int face = 0;
  int loop = 0;
  int type = 0;  // 1 vertex, 2 edge
  int geom = 0;
  int intra = 0;

  std::array<int, 5> as_array() const { return {face, loop, type, geom, intra}; }
  friend bool operator==(const StructuralIndex&, const StructuralIndex&) = default;
};

inline constexpr int kMaxIntra = 13;

class Grammar {
 public:
  explicit Grammar(const Config& config = {});

  const Config& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocab_; }

  /// Successor state. Throws GrammarError carrying the position
  /// (state.tokens) and the expected token set.
  GrammarState advance(const GrammarState& state, int token) const;

  bool accepts(const GrammarState& state, int token) const;

  /// One byte per vocabulary id, 1 where `advance` would succeed.
  std::vector<std::uint8_t> valid_next_mask(const GrammarState& state) const;
  void fill_mask(const GrammarState& state, std::span<std::uint8_t> mask) const;
  std::vector<int> valid_ids(const GrammarState& state) const;

  /// Multi-index of `token` when read in `state` (state must accept it).
  StructuralIndex index_of(const GrammarState& state, int token) const;

  /// Fewest tokens that take `state` to Done.
  int min_tokens_to_finish(const GrammarState& state) const;

  /// Runs the whole prefix; throws GrammarError at the first bad token.
  GrammarState run(std::span<const int> prefix) const;

 private:
  // Successor ignoring the length budget; false when no transition exists.
  bool step(const GrammarState& state, int token, GrammarState& next) const;

  Config config_;
  Vocabulary vocab_;
};

/// One multi-index per token. Throws GrammarError for an unparseable prefix.
std::vector<StructuralIndex> structural_indices(std::span<const int> tokens,
                                                const Config& config = {});

/// Inverse of serialize_model. Produces a pre-merge model in which every face
/// owns its own vertex copies; complex edges are decoded and aligned to their
/// endpoints. Throws GrammarError on the first invalid token or when the
/// sequence ends before EOS.
WireframeModel parse_tokens(std::span<const int> tokens, const Codebook* book,
                            const Config& config = {});

}  // namespace brepseq
