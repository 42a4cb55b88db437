#include "brepseq/pipeline.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <cmath>
#include <map>
#include <thread>

#include <json.hpp>

#include "brepseq/error.hpp"
#include "brepseq/grammar.hpp"
#include "brepseq/metrics.hpp"
#include "brepseq/synth.hpp"
#include "rng.hpp"

namespace brepseq {

namespace {

bool has_complex(const WireframeModel& m) {
  for (const auto& f : m.faces)
    for (const auto& l : f.loops)
      for (const auto& e : l.entries)
        if (e.edge.kind == EdgeKind::Complex) return true;
  return false;
}

constexpr double kSampleTolerance = 0.05;

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

Encoded encode_model(const WireframeModel& model, const Codebook* book, const Config& config) {
  validate_model(model, config);
  Encoded out;
  Normalized n = normalize_model(model);
  out.transform = n.transform;
  QuantizedModel q = quantize_vertices(n.model, config.bits);
  out.conflicts = std::move(q.conflicts);
  if (!out.conflicts.empty()) {
    out.canonical = std::move(q.model);
    return out;
  }
  out.canonical = canonical_order(q.model);
  if (has_complex(out.canonical)) {
    if (!book) throw Error(ErrorCode::kInvalidArgument, "model has complex edges but no codebook was given");
    out.canonical = encode_complex_edges(out.canonical, *book);
  }
  out.tokens = serialize_model(out.canonical, config);
  return out;
}

std::vector<std::vector<Vec3>> corpus_curves(std::span<const WireframeModel> models, const Config& config) {
  std::vector<std::vector<Vec3>> out;
  for (const auto& m : models) {
    QuantizedModel q = quantize_vertices(normalize_model(m).model, config.bits);
    if (!q.conflicts.empty()) continue;
    auto curves = collect_canonical_curves(canonical_order(q.model));
    for (auto& c : curves) out.push_back(std::move(c));
  }
  return out;
}

Codebook fit_codebook_for_models(std::span<const WireframeModel> models, std::uint64_t seed, const Config& config) {
  CodebookFitOptions opt;
  opt.size = config.codebook_size;
  opt.levels = config.rq_levels;
  opt.points_per_segment = config.grid_n * config.rq_levels / config.curve_tokens;
  const auto curves = corpus_curves(models, config);
  if (curves.empty()) throw Error(ErrorCode::kInvalidArgument, "corpus has no complex curves to fit");
  return fit_curve_codebook(curves, seed, opt);
}

RoundTrip roundtrip_model(const WireframeModel& model, const Codebook* book, const Config& config) {
  RoundTrip r;
  const Encoded enc = encode_model(model, book, config);
  if (!enc.conflicts.empty()) {
    r.reason = "quantization conflict";
    return r;
  }
  r.conflict_free = true;
  r.tokens = enc.tokens.size();
  const WireframeModel parsed = parse_tokens(enc.tokens, book, config);
  const BrepGraph src = merge_wireframe(enc.canonical, config.eps_edge);
  const BrepGraph rec = merge_wireframe(parsed, config.eps_edge);
  r.vertices = rec.vertices.size();
  r.edges = rec.edges.size();
  r.faces = rec.faces.size();
  r.isomorphic = graphs_isomorphic(src, rec, kSampleTolerance, &r.reason);
  const ValidityReport validity = validity_check(rec);
  r.valid = validity.valid;
  if (!r.valid && r.reason.empty()) r.reason = "reconstruction fails validity (" + validity.defects.front().kind + ")";

  std::map<QPos, Vec3> rec_pos;
  for (std::size_t i = 0; i < rec.qpos.size(); ++i) rec_pos[rec.qpos[i]] = rec.vertices[i];
  for (const auto& v : enc.canonical.vertices) {
    const auto it = rec_pos.find(*v.qpos);
    if (it == rec_pos.end()) {
      r.max_vertex_error = INFINITY;
      break;
    }
    for (int c = 0; c < 3; ++c) r.max_vertex_error = std::max(r.max_vertex_error, std::abs(v.position[c] - it->second[c]));
  }
  r.chamfer = chamfer(sample_model_points(enc.canonical), sample_model_points(parsed));
  return r;
}

std::vector<RoundTrip> roundtrip_corpus(std::span<const WireframeModel> models, const Codebook* book,
                                        const Config& config, unsigned threads) {
  std::vector<RoundTrip> out(models.size());
  parallel_for(models.size(), threads, [&](std::size_t i) {
    try {
      out[i] = roundtrip_model(models[i], book, config);
    } catch (const std::exception& e) {
      out[i].reason = e.what();
    }
  });
  return out;
}

std::string roundtrip_to_json(const RoundTrip& r) {
  const bool pass = r.conflict_free && r.isomorphic && r.valid;
  nlohmann::json j{{"pass", pass},
                   {"conflict_free", r.conflict_free},
                   {"isomorphic", r.isomorphic},
                   {"valid", r.valid},
                   {"max_vertex_error", std::isfinite(r.max_vertex_error) ? r.max_vertex_error : -1.0},
                   {"chamfer", r.chamfer},
                   {"tokens", r.tokens},
                   {"vertices", r.vertices},
                   {"edges", r.edges},
                   {"faces", r.faces}};
  if (!r.reason.empty()) j["reason"] = r.reason;
  return j.dump();
}

MetricsReport corpus_metrics(std::span<const WireframeModel> generated,
                             std::span<const WireframeModel> reference, const Config& config,
                             unsigned threads, std::size_t emd_points) {
  if (generated.empty() || reference.empty())
    throw Error(ErrorCode::kInvalidArgument, "metrics need nonempty generated and reference sets");
  auto sample = [&](std::span<const WireframeModel> models) {
    std::vector<PointSet> pts(models.size());
    parallel_for(models.size(), threads,
                 [&](std::size_t i) { pts[i] = sample_model_points(normalize_model(models[i]).model); });
    return pts;
  };
  const std::vector<PointSet> gen = sample(generated);
  const std::vector<PointSet> ref = sample(reference);
  const std::size_t ng = gen.size(), nr = ref.size();
  std::vector<double> cd(ng * nr), em(ng * nr);
  parallel_for(ng * nr, threads, [&](std::size_t k) {
    const auto& a = gen[k / nr];
    const auto& b = ref[k % nr];
    cd[k] = chamfer(a, b);
    em[k] = emd_resampled(a, b, emd_points);
  });
  MetricsReport r;
  const CoverageMmd c = coverage_mmd_from_matrix(cd, ng, nr);
  const CoverageMmd e = coverage_mmd_from_matrix(em, ng, nr);
  r.cov_cd = c.cov;
  r.mmd_cd = c.mmd;
  r.cov_emd = e.cov;
  r.mmd_emd = e.mmd;
  r.jsd = jsd_voxel(gen, ref);
  if (ng == nr)
    for (std::size_t i = 0; i < ng; ++i)
      r.pairs.push_back({cd[i * nr + i], em[i * nr + i], fscore(gen[i], ref[i], config.tau_fscore)});
  return r;
}

std::string metrics_to_json(const MetricsReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : report.pairs) rows.push_back({{"chamfer", p.chamfer}, {"emd", p.emd}, {"fscore", p.fscore}});
  return nlohmann::json{{"cov_cd", report.cov_cd},   {"cov_emd", report.cov_emd},
                        {"mmd_cd", report.mmd_cd},   {"mmd_emd", report.mmd_emd},
                        {"jsd_cd_proxy", report.jsd}, {"rows", rows}}
             .dump(1) +
         "\n";
}

std::vector<StressRow> run_stress(std::span<const WireframeModel> corpus, const Codebook* book,
                                  std::span<const double> sigmas, std::uint64_t seed, const Config& config,
                                  unsigned threads) {
  struct Cell {
    bool conflict = false, valid = false, counts = false;
    double chamfer = 0;
  };
  const std::size_t ns = sigmas.size();
  std::vector<Cell> cells(corpus.size() * ns);
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    const WireframeModel clean = normalize_model(corpus[i]).model;
    const BrepGraph clean_graph = merge_wireframe(quantize_vertices(clean, config.bits).model, config.eps_edge);
    const PointSet clean_pts = sample_model_points(clean);
    for (std::size_t s = 0; s < ns; ++s) {
      Cell& cell = cells[i * ns + s];
      const WireframeModel noisy = perturb_model(clean, sigmas[s], derive_seed(seed, i * ns + s));
      const Encoded enc = encode_model(noisy, book, config);
      if (!enc.conflicts.empty()) {
        cell.conflict = true;
        continue;
      }
      const WireframeModel parsed = parse_tokens(enc.tokens, book, config);
      const BrepGraph g = merge_wireframe(parsed, config.eps_edge);
      cell.valid = validity_check(g).valid;
      cell.counts = g.vertices.size() == clean_graph.vertices.size() && g.edges.size() == clean_graph.edges.size() &&
                    g.faces.size() == clean_graph.faces.size();
      PointSet pts = sample_model_points(parsed);
      SimilarityTransform back = enc.transform;
      for (auto& p : pts) p = back.invert(p);
      cell.chamfer = chamfer(clean_pts, pts);
    }
  });

  std::vector<StressRow> rows;
  for (std::size_t s = 0; s < ns; ++s) {
    StressRow row;
    row.sigma = sigmas[s];
    row.models = corpus.size();
    std::size_t measured = 0, valid = 0, counts = 0, conflicts = 0;
    double cd = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const Cell& c = cells[i * ns + s];
      if (c.conflict) {
        ++conflicts;
        continue;
      }
      ++measured;
      cd += c.chamfer;
      valid += c.valid;
      counts += c.counts;
    }
    const double total = static_cast<double>(std::max<std::size_t>(corpus.size(), 1));
    row.mean_chamfer = measured ? cd / static_cast<double>(measured) : 0;
    row.validity_rate = static_cast<double>(valid) / total;
    row.count_match_rate = static_cast<double>(counts) / total;
    row.conflict_rate = static_cast<double>(conflicts) / total;
    rows.push_back(row);
  }
  return rows;
}

std::string stress_to_json(const std::vector<StressRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"sigma", r.sigma},
                   {"models", r.models},
                   {"mean_chamfer", r.mean_chamfer},
                   {"validity_rate", r.validity_rate},
                   {"count_match_rate", r.count_match_rate},
                   {"conflict_rate", r.conflict_rate}});
  return nlohmann::json{{"rows", arr}}.dump(1) + "\n";
}

}  // namespace brepseq
