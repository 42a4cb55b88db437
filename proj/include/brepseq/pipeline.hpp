#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "brepseq/config.hpp"
#include "brepseq/model.hpp"
#include "brepseq/quantizer.hpp"
#include "brepseq/serializer.hpp"
#include "brepseq/topology.hpp"

namespace brepseq {

struct Encoded {
  WireframeModel canonical;  // normalized, quantized, canonical-ordered, curves encoded
  SimilarityTransform transform;
  std::vector<QuantizeConflict> conflicts;
  TokenSequence tokens;  // empty when conflicts were found
};

/// normalize -> quantize -> canonical_order -> encode curves -> serialize.
/// `book` may be null when the model has no complex edges.
Encoded encode_model(const WireframeModel& model, const Codebook* book, const Config& config = {});

/// Normalized, quantized, canonical models' complex curves in the canonical
/// frame, pooled over a corpus.
std::vector<std::vector<Vec3>> corpus_curves(std::span<const WireframeModel> models,
                                             const Config& config = {});

Codebook fit_codebook_for_models(std::span<const WireframeModel> models, std::uint64_t seed,
                                 const Config& config = {});

struct RoundTrip {
  bool conflict_free = false;
  bool isomorphic = false;
  bool valid = false;
  double max_vertex_error = 0;  // per-axis, normalized units
  double chamfer = 0;           // source vs reconstructed edge samples
  std::size_t tokens = 0;
  std::size_t vertices = 0, edges = 0, faces = 0;
  std::string reason;
};

/// serialize -> parse -> merge, compared against the source's own merged
/// graph and its normalized coordinates.
RoundTrip roundtrip_model(const WireframeModel& model, const Codebook* book,
                          const Config& config = {});

/// roundtrip_model over a corpus. A model that throws becomes a failed row
/// whose reason is the error message.
std::vector<RoundTrip> roundtrip_corpus(std::span<const WireframeModel> models, const Codebook* book,
                                        const Config& config = {}, unsigned threads = 1);

std::string roundtrip_to_json(const RoundTrip& r);

struct MetricsReport {
  double cov_cd = 0, cov_emd = 0, mmd_cd = 0, mmd_emd = 0, jsd = 0;
  struct Pair {
    double chamfer = 0, emd = 0, fscore = 0;
  };
  std::vector<Pair> pairs;  // generated[i] vs reference[i], when the sizes agree
};

/// Distribution metrics of two corpora. Every model is normalized and
/// sampled with sample_model_points first.
MetricsReport corpus_metrics(std::span<const WireframeModel> generated,
                             std::span<const WireframeModel> reference, const Config& config = {},
                             unsigned threads = 1, std::size_t emd_points = 256);

std::string metrics_to_json(const MetricsReport& report);

struct StressRow {
  double sigma = 0;
  std::size_t models = 0;
  double mean_chamfer = 0;
  double validity_rate = 0;
  double count_match_rate = 0;  // reconstruction has the clean model's V, E, F counts
  double conflict_rate = 0;
};

/// Noise protocol: each model is normalized, jittered at every sigma,
/// round-tripped, and compared to its clean version.
std::vector<StressRow> run_stress(std::span<const WireframeModel> corpus, const Codebook* book,
                                  std::span<const double> sigmas, std::uint64_t seed,
                                  const Config& config = {}, unsigned threads = 1);

std::string stress_to_json(const std::vector<StressRow>& rows);

}  // namespace brepseq
