#include "brepseq/brepseq.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "brepseq/config.hpp"
#include "brepseq/error.hpp"
#include "brepseq/grammar.hpp"
#include "brepseq/model.hpp"
#include "brepseq/pipeline.hpp"
#include "brepseq/quantizer.hpp"
#include "brepseq/serializer.hpp"
#include "brepseq/surface.hpp"
#include "brepseq/synth.hpp"
#include "brepseq/topology.hpp"

using nlohmann::json;

struct bs_config {
  brepseq::Config value;
};
struct bs_model {
  brepseq::WireframeModel value;
};
struct bs_codebook {
  brepseq::Codebook value;
};
struct bs_grammar {
  brepseq::Grammar value;
};
struct bs_corpus {
  std::vector<brepseq::SynthModel> models;
  std::vector<brepseq::FamilySpec> specs;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_error_json = R"({"code":0,"message":""})";

const brepseq::Config kDefaults{};

const brepseq::Config& cfg(const bs_config* c) { return c ? c->value : kDefaults; }

void set_error(bs_status code, const std::string& message, const json& extra = json::object()) {
  g_error = message;
  json j = extra;
  j["code"] = static_cast<int>(code);
  j["message"] = message;
  g_error_json = j.dump();
}

bs_status status_of(brepseq::ErrorCode code) { return static_cast<bs_status>(static_cast<int>(code)); }

template <typename Fn>
bs_status guard(Fn&& fn) {
  try {
    fn();
    g_error.clear();
    g_error_json = R"({"code":0,"message":""})";
    return BS_OK;
  } catch (const brepseq::GrammarError& e) {
    set_error(BS_GRAMMAR, e.what(), {{"pos", e.position()}, {"expected", e.expected()}});
    return BS_GRAMMAR;
  } catch (const brepseq::Error& e) {
    set_error(status_of(e.code()), e.what());
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    set_error(BS_INTERNAL, "out of memory");
    return BS_INTERNAL;
  } catch (const std::exception& e) {
    set_error(BS_INTERNAL, e.what());
    return BS_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw brepseq::Error(brepseq::ErrorCode::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const std::string& s) { *out = dup_string(s); }

int32_t* dup_tokens(const std::vector<int>& tokens) {
  int32_t* out = static_cast<int32_t*>(std::malloc(std::max<std::size_t>(tokens.size(), 1) * sizeof(int32_t)));
  if (!out) throw std::bad_alloc();
  std::copy(tokens.begin(), tokens.end(), out);
  return out;
}

std::vector<int> to_vector(const int32_t* tokens, std::size_t count) {
  require(tokens || count == 0, "token array is null");
  return std::vector<int>(tokens, tokens + count);
}

std::vector<brepseq::WireframeModel> unwrap(const bs_model* const* models, std::size_t count) {
  require(models || count == 0, "model array is null");
  std::vector<brepseq::WireframeModel> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    require(models[i], "model array holds a null handle");
    out.push_back(models[i]->value);
  }
  return out;
}

unsigned thread_count(unsigned requested) {
  if (requested) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

json point(const brepseq::Vec3& p) { return json::array({p.x, p.y, p.z}); }

void stderr_warning(const char* message, void*) { std::fprintf(stderr, "warning: %s\n", message); }

// Grammar-serve request handling; errors become protocol responses.
std::string serve(const brepseq::Grammar& g, const char* line) {
  json req;
  try {
    req = json::parse(line ? line : "");
  } catch (const json::parse_error&) {
    return json{{"error", {{"pos", -1}, {"expected", json::array()}, {"message", "malformed JSON"}}}}.dump();
  }
  if (!req.is_object() || !req.contains("prefix") || !req["prefix"].is_array())
    return json{{"error", {{"pos", -1}, {"expected", json::array()}, {"message", "request needs a prefix array"}}}}
        .dump();
  std::vector<int> prefix;
  for (const auto& t : req["prefix"]) {
    if (!t.is_number_integer())
      return json{{"error", {{"pos", prefix.size()}, {"expected", json::array()}, {"message", "token ids must be integers"}}}}
          .dump();
    prefix.push_back(t.get<int>());
  }
  try {
    return json{{"valid_ids", g.valid_ids(g.run(prefix))}}.dump();
  } catch (const brepseq::GrammarError& e) {
    return json{{"error", {{"pos", e.position()}, {"expected", e.expected()}}}}.dump();
  }
}

}  // namespace

extern "C" {

const char* bs_version(void) { return "0.1.0"; }

const char* bs_status_name(bs_status status) {
  switch (status) {
    case BS_OK: return "ok";
    case BS_INVALID_ARGUMENT: return "invalid argument";
    case BS_IO: return "io error";
    case BS_SCHEMA: return "schema error";
    case BS_INVARIANT: return "invariant violation";
    case BS_CAPACITY: return "capacity exceeded";
    case BS_GRAMMAR: return "grammar error";
    case BS_GEOMETRY: return "geometry error";
    case BS_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* bs_last_error(void) { return g_error.c_str(); }
const char* bs_last_error_json(void) { return g_error_json.c_str(); }

void bs_set_warning_handler(bs_warning_fn fn, void* user_data) {
  brepseq::set_warning_handler(fn ? fn : &stderr_warning, fn ? user_data : nullptr);
}

void bs_string_free(char* s) { std::free(s); }
void bs_tokens_free(int32_t* tokens) { std::free(tokens); }

bs_status bs_config_default(bs_config** out) {
  return guard([&] {
    require(out, "out is null");
    *out = new bs_config{};
  });
}

bs_status bs_config_load(const char* path, bs_config** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = new bs_config{brepseq::Config::load(path)};
  });
}

bs_status bs_config_from_json(const char* text, bs_config** out) {
  return guard([&] {
    require(text && out, "null argument");
    *out = new bs_config{brepseq::Config::from_json(text)};
  });
}

bs_status bs_config_to_json(const bs_config* config, char** out_json) {
  return guard([&] {
    require(out_json, "out is null");
    emit(out_json, cfg(config).to_json());
  });
}

void bs_config_free(bs_config* config) { delete config; }

bs_status bs_model_load(const char* path, const bs_config* config, bs_model** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = new bs_model{brepseq::load_model(path, cfg(config))};
  });
}

bs_status bs_model_from_json(const char* text, const bs_config* config, bs_model** out) {
  return guard([&] {
    require(text && out, "null argument");
    *out = new bs_model{brepseq::model_from_json(text, cfg(config))};
  });
}

bs_status bs_model_to_json(const bs_model* model, char** out_json) {
  return guard([&] {
    require(model && out_json, "null argument");
    emit(out_json, brepseq::model_to_json(model->value));
  });
}

bs_status bs_model_save(const bs_model* model, const char* path) {
  return guard([&] {
    require(model && path, "null argument");
    brepseq::save_model(model->value, path);
  });
}

bs_status bs_model_summary(const bs_model* model, char** out_json) {
  return guard([&] {
    require(model && out_json, "null argument");
    const auto& m = model->value;
    std::size_t loops = 0, counts[3] = {0, 0, 0};
    for (const auto& f : m.faces)
      for (const auto& l : f.loops) {
        ++loops;
        for (const auto& e : l.entries) ++counts[static_cast<int>(e.edge.kind)];
      }
    emit(out_json, json{{"vertices", m.vertices.size()},
                        {"faces", m.faces.size()},
                        {"loops", loops},
                        {"edges", {{"line", counts[0]}, {"arc", counts[1]}, {"complex", counts[2]}}}}
                       .dump());
  });
}

void bs_model_free(bs_model* model) { delete model; }

bs_status bs_model_perturb(const bs_model* model, double sigma, uint64_t seed, bs_model** out) {
  return guard([&] {
    require(model && out, "null argument");
    *out = new bs_model{brepseq::perturb_model(model->value, sigma, seed)};
  });
}

bs_status bs_corpus_generate(int count, uint64_t seed, const double* mix, const bs_config* config,
                             bs_corpus** out) {
  return guard([&] {
    require(out, "out is null");
    require(count >= 0, "count must be non-negative");
    brepseq::FamilyMix m = brepseq::default_family_mix();
    if (mix) std::copy(mix, mix + BS_FAMILY_COUNT, m.begin());
    auto corpus = std::make_unique<bs_corpus>();
    corpus->specs = brepseq::corpus_specs(count, m, seed);
    corpus->models = brepseq::generate_corpus(count, m, seed, cfg(config).grid_n);
    *out = corpus.release();
  });
}

size_t bs_corpus_size(const bs_corpus* corpus) { return corpus ? corpus->models.size() : 0; }

bs_status bs_corpus_model(const bs_corpus* corpus, size_t index, bs_model** out) {
  return guard([&] {
    require(corpus && out, "null argument");
    require(index < corpus->models.size(), "corpus index out of range");
    *out = new bs_model{corpus->models[index].model};
  });
}

bs_status bs_corpus_spec_json(const bs_corpus* corpus, size_t index, char** out_json) {
  return guard([&] {
    require(corpus && out_json, "null argument");
    require(index < corpus->specs.size(), "corpus index out of range");
    emit(out_json, brepseq::spec_to_json(brepseq::resolve_params(corpus->specs[index])));
  });
}

bs_status bs_corpus_truth_json(const bs_corpus* corpus, size_t index, char** out_json) {
  return guard([&] {
    require(corpus && out_json, "null argument");
    require(index < corpus->models.size(), "corpus index out of range");
    const auto& s = corpus->models[index];
    json faces = json::array();
    for (std::size_t f = 0; f < s.truth.size(); ++f) {
      json pts = json::array();
      for (const auto& p : s.truth[f]) pts.push_back(point(p));
      const auto n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(s.truth[f].size()))));
      faces.push_back({{"n", n}, {"planar", static_cast<bool>(s.planar[f])}, {"points", pts}});
    }
    emit(out_json, json{{"faces", faces}}.dump());
  });
}

bs_status bs_corpus_edge_mix_json(const bs_corpus* corpus, char** out_json) {
  return guard([&] {
    require(corpus && out_json, "null argument");
    const auto f = brepseq::edge_type_fractions(corpus->models);
    emit(out_json, json{{"line", f[0]}, {"arc", f[1]}, {"complex", f[2]}}.dump());
  });
}

void bs_corpus_free(bs_corpus* corpus) { delete corpus; }

bs_status bs_codebook_fit(const bs_model* const* models, size_t count, uint64_t seed, const bs_config* config,
                          bs_codebook** out) {
  return guard([&] {
    require(out, "out is null");
    const auto ms = unwrap(models, count);
    *out = new bs_codebook{brepseq::fit_codebook_for_models(ms, seed, cfg(config))};
  });
}

bs_status bs_codebook_load(const char* path, bs_codebook** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = new bs_codebook{brepseq::Codebook::load(path)};
  });
}

bs_status bs_codebook_save(const bs_codebook* book, const char* path) {
  return guard([&] {
    require(book && path, "null argument");
    book->value.save(path);
  });
}

void bs_codebook_free(bs_codebook* book) { delete book; }

bs_status bs_encode(const bs_model* model, const bs_codebook* book, const bs_config* config, int32_t** out_tokens,
                    size_t* out_count) {
  return guard([&] {
    require(model && out_tokens && out_count, "null argument");
    const auto enc = brepseq::encode_model(model->value, book ? &book->value : nullptr, cfg(config));
    if (!enc.conflicts.empty()) {
      const auto& c = enc.conflicts.front();
      const char* kind =
          c.kind == brepseq::QuantizeConflict::Kind::ZeroLengthEdge ? "zero-length edge" : "duplicate loop vertex";
      throw brepseq::Error(brepseq::ErrorCode::kInvariant,
                           "quantization conflict (" + std::string(kind) + ") at face " + std::to_string(c.face) +
                               " loop " + std::to_string(c.loop) + " entry " + std::to_string(c.entry) + "; " +
                               std::to_string(enc.conflicts.size()) + " conflict(s) in total");
    }
    *out_tokens = dup_tokens(enc.tokens);
    *out_count = enc.tokens.size();
  });
}

bs_status bs_decode(const int32_t* tokens, size_t count, const bs_codebook* book, const bs_config* config,
                    bs_model** out) {
  return guard([&] {
    require(out, "out is null");
    const auto t = to_vector(tokens, count);
    *out = new bs_model{brepseq::parse_tokens(t, book ? &book->value : nullptr, cfg(config))};
  });
}

bs_status bs_tokens_to_json(const int32_t* tokens, size_t count, char** out_json) {
  return guard([&] {
    require(out_json, "out is null");
    emit(out_json, brepseq::tokens_to_json(to_vector(tokens, count)));
  });
}

bs_status bs_tokens_from_json(const char* text, int32_t** out_tokens, size_t* out_count) {
  return guard([&] {
    require(text && out_tokens && out_count, "null argument");
    const auto t = brepseq::tokens_from_json(text);
    *out_tokens = dup_tokens(t);
    *out_count = t.size();
  });
}

bs_status bs_structural_indices_json(const int32_t* tokens, size_t count, const bs_config* config,
                                     char** out_json) {
  return guard([&] {
    require(out_json, "out is null");
    json rows = json::array();
    for (const auto& idx : brepseq::structural_indices(to_vector(tokens, count), cfg(config)))
      rows.push_back(idx.as_array());
    emit(out_json, json{{"indices", rows}}.dump());
  });
}

bs_status bs_merge(const bs_model* model, const bs_config* config, char** out_json) {
  return guard([&] {
    require(model && out_json, "null argument");
    const auto& c = cfg(config);
    brepseq::WireframeModel m = model->value;
    // Merging keys on qpos; quantize first when the model does not carry it.
    const bool quantized = std::all_of(m.vertices.begin(), m.vertices.end(), [](const auto& v) { return v.qpos.has_value(); });
    if (!quantized) m = brepseq::quantize_vertices(brepseq::normalize_model(m).model, c.bits).model;
    const auto graph = brepseq::merge_wireframe(m, c.eps_edge, c.grid_n);
    const auto report = brepseq::validity_check(graph);
    emit(out_json, json{{"graph", json::parse(brepseq::graph_to_json(graph))},
                        {"validity", json::parse(brepseq::validity_to_json(report))}}
                       .dump());
  });
}

bs_status bs_prior(const bs_model* model, const bs_config* config, const char* truth_json, char** out_json) {
  return guard([&] {
    require(model && out_json, "null argument");
    const auto& c = cfg(config);
    const auto& m = model->value;
    json truth;
    if (truth_json) {
      try {
        truth = json::parse(truth_json).at("faces");
      } catch (const json::exception& e) {
        throw brepseq::Error(brepseq::ErrorCode::kSchema, std::string("truth file: ") + e.what());
      }
      if (truth.size() != m.faces.size())
        throw brepseq::Error(brepseq::ErrorCode::kSchema, "truth file face count does not match the model");
    }
    json faces = json::array();
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
      const brepseq::FaceGrid raw = brepseq::generate_prior_grid(m.faces[f], m, c.grid_n);
      const brepseq::FaceGrid prior = brepseq::canonicalize_d4(raw, c.bits);
      const brepseq::PrimitiveFit fit = brepseq::classify_primitive(prior);
      json entry{{"face", f},
                 {"primitive", brepseq::to_string(fit.type)},
                 {"rms", {{"plane", fit.plane_rms}, {"cylinder", fit.cylinder_rms}, {"sphere", fit.sphere_rms}}},
                 {"prior", json::parse(brepseq::grid_to_json(prior))}};
      if (truth_json) {
        brepseq::FaceGrid target;
        target.n = truth[f].at("n").get<int>();
        require(target.n == raw.n, "truth grid size differs from the prior grid size");
        for (const auto& p : truth[f].at("points"))
          target.points.push_back(raw.transform.apply({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()}));
        require(target.points.size() == raw.points.size(), "truth grid holds the wrong number of points");
        target.transform = raw.transform;
        target = brepseq::apply_d4(target, prior.d4);
        target.d4 = prior.d4;
        entry["target"] = json::parse(brepseq::grid_to_json(target));
      }
      faces.push_back(std::move(entry));
    }
    emit(out_json, json{{"faces", faces}}.dump());
  });
}

bs_status bs_roundtrip(const bs_model* model, const bs_codebook* book, const bs_config* config, char** out_json) {
  return guard([&] {
    require(model && out_json, "null argument");
    emit(out_json, brepseq::roundtrip_to_json(brepseq::roundtrip_model(model->value, book ? &book->value : nullptr, cfg(config))));
  });
}

bs_status bs_roundtrip_corpus(const bs_model* const* models, size_t count, const bs_codebook* book,
                              const bs_config* config, unsigned threads, char** out_json) {
  return guard([&] {
    require(out_json, "out is null");
    const auto ms = unwrap(models, count);
    const auto rows = brepseq::roundtrip_corpus(ms, book ? &book->value : nullptr, cfg(config), thread_count(threads));
    json arr = json::array();
    std::size_t passed = 0;
    for (const auto& r : rows) {
      json j = json::parse(brepseq::roundtrip_to_json(r));
      passed += j["pass"].get<bool>();
      arr.push_back(std::move(j));
    }
    const double rate = rows.empty() ? 0.0 : static_cast<double>(passed) / static_cast<double>(rows.size());
    emit(out_json, json{{"models", arr}, {"passed", passed}, {"pass_rate", rate}}.dump(1));
  });
}

bs_status bs_stress(const bs_model* const* models, size_t count, const bs_codebook* book, const double* sigmas,
                    size_t sigma_count, uint64_t seed, const bs_config* config, unsigned threads, char** out_json) {
  return guard([&] {
    require(out_json, "out is null");
    require(sigmas || sigma_count == 0, "sigma array is null");
    const auto ms = unwrap(models, count);
    const std::vector<double> s(sigmas, sigmas + sigma_count);
    emit(out_json, brepseq::stress_to_json(brepseq::run_stress(ms, book ? &book->value : nullptr, s, seed, cfg(config),
                                                               thread_count(threads))));
  });
}

bs_status bs_metrics(const bs_model* const* generated, size_t generated_count, const bs_model* const* reference,
                     size_t reference_count, const bs_config* config, unsigned threads, size_t emd_points,
                     char** out_json) {
  return guard([&] {
    require(out_json, "out is null");
    const auto g = unwrap(generated, generated_count);
    const auto r = unwrap(reference, reference_count);
    emit(out_json, brepseq::metrics_to_json(
                       brepseq::corpus_metrics(g, r, cfg(config), thread_count(threads), emd_points ? emd_points : 256)));
  });
}

bs_status bs_grammar_new(const bs_config* config, bs_grammar** out) {
  return guard([&] {
    require(out, "out is null");
    *out = new bs_grammar{brepseq::Grammar(cfg(config))};
  });
}

void bs_grammar_free(bs_grammar* grammar) { delete grammar; }

bs_status bs_grammar_valid_ids(const bs_grammar* grammar, const int32_t* prefix, size_t count, int32_t** out_ids,
                               size_t* out_count) {
  return guard([&] {
    require(grammar && out_ids && out_count, "null argument");
    const auto ids = grammar->value.valid_ids(grammar->value.run(to_vector(prefix, count)));
    *out_ids = dup_tokens(ids);
    *out_count = ids.size();
  });
}

bs_status bs_grammar_serve_line(const bs_grammar* grammar, const char* request, char** out_response) {
  return guard([&] {
    require(grammar && out_response, "null argument");
    emit(out_response, serve(grammar->value, request));
  });
}

}  // extern "C"
