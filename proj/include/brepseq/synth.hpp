#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "brepseq/model.hpp"

namespace brepseq {

enum class Family { Box, LBracket, PlateWithHoles, CylinderSegment, PrismFillet, FreeformPlate };
inline constexpr int kFamilyCount = 6;

const char* to_string(Family f);
std::optional<Family> family_from_string(const std::string& s);

/// Generation is a pure function of (family, params, seed). Parameters left
/// out of `params` are drawn from the family's documented ranges using seed.
struct FamilySpec {
  Family family = Family::Box;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
};

/// Fills every missing parameter and checks ranges (throws kInvalidArgument).
FamilySpec resolve_params(const FamilySpec& spec);

/// A generated model plus, per face, the untrimmed true surface sampled on an
/// N x N grid over the face's parameter bbox (model coordinates).
struct SynthModel {
  WireframeModel model;
  std::vector<std::vector<Vec3>> truth;
  std::vector<bool> planar;  // per face
};

SynthModel generate(const FamilySpec& spec, int grid_n = 32);
WireframeModel generate_model(const FamilySpec& spec);

using FamilyMix = std::array<double, kFamilyCount>;
FamilyMix default_family_mix();

/// Per-model specs of a corpus; model k uses seed derived from (seed, k).
std::vector<FamilySpec> corpus_specs(int count, const FamilyMix& mix, std::uint64_t seed);
std::vector<SynthModel> generate_corpus(int count, const FamilyMix& mix, std::uint64_t seed,
                                        int grid_n = 32);

/// Jitters vertices, arc midpoints and complex samples with N(0, sigma^2).
/// Every face copy of an edge draws its own noise; complex sample ends follow
/// their (jittered) vertices. Topology untouched.
WireframeModel perturb_model(const WireframeModel& model, double sigma, std::uint64_t seed);

/// Line / Arc / Complex fractions over every distinct edge of the corpus.
std::array<double, 3> edge_type_fractions(const std::vector<SynthModel>& corpus);

/// Target mix echoing the reference curve-type balance (Line, Arc, Complex).
inline constexpr std::array<double, 3> kTargetEdgeMix{0.459, 0.305, 0.236};

std::string spec_to_json(const FamilySpec& spec);
FamilySpec spec_from_json(const std::string& text);

}  // namespace brepseq
