/* C interface to the brepseq library.
 *
 * Every function returns a bs_status. On failure the message (and, for
 * grammar errors, the failing position and expected ids) is available from
 * bs_last_error / bs_last_error_json on the calling thread until the next
 * call. Strings and token arrays returned through out-parameters are owned by
 * the caller and released with bs_string_free / bs_tokens_free. Handles are
 * immutable after creation and may be shared across threads.
 */
#ifndef BREPSEQ_H
#define BREPSEQ_H

#include <stddef.h>
#include <stdint.h>

#if defined(BREPSEQ_BUILDING)
#define BS_API __attribute__((visibility("default")))
#else
#define BS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bs_status {
  BS_OK = 0,
  BS_INVALID_ARGUMENT = 1,
  BS_IO = 2,
  BS_SCHEMA = 3,
  BS_INVARIANT = 4,
  BS_CAPACITY = 5,
  BS_GRAMMAR = 6,
  BS_GEOMETRY = 7,
  BS_INTERNAL = 100
} bs_status;

typedef struct bs_config bs_config;
typedef struct bs_model bs_model;
typedef struct bs_codebook bs_codebook;
typedef struct bs_grammar bs_grammar;
typedef struct bs_corpus bs_corpus;

enum { BS_FAMILY_COUNT = 6 };

BS_API const char* bs_version(void);
BS_API const char* bs_status_name(bs_status status);
BS_API const char* bs_last_error(void);
/* {"code":int,"message":str} plus "pos" and "expected" for BS_GRAMMAR. */
BS_API const char* bs_last_error_json(void);

typedef void (*bs_warning_fn)(const char* message, void* user_data);
/* NULL restores the default (stderr). */
BS_API void bs_set_warning_handler(bs_warning_fn fn, void* user_data);

BS_API void bs_string_free(char* s);
BS_API void bs_tokens_free(int32_t* tokens);

/* Config. A NULL bs_config* argument anywhere means the defaults. */
BS_API bs_status bs_config_default(bs_config** out);
BS_API bs_status bs_config_load(const char* path, bs_config** out);
BS_API bs_status bs_config_from_json(const char* json, bs_config** out);
BS_API bs_status bs_config_to_json(const bs_config* config, char** out_json);
BS_API void bs_config_free(bs_config* config);

/* Models (JSON interchange format). */
BS_API bs_status bs_model_load(const char* path, const bs_config* config, bs_model** out);
BS_API bs_status bs_model_from_json(const char* json, const bs_config* config, bs_model** out);
BS_API bs_status bs_model_to_json(const bs_model* model, char** out_json);
BS_API bs_status bs_model_save(const bs_model* model, const char* path);
/* {"vertices":V,"faces":F,"loops":L,"edges":{"line":..,"arc":..,"complex":..}} */
BS_API bs_status bs_model_summary(const bs_model* model, char** out_json);
BS_API void bs_model_free(bs_model* model);

/* Jittered copy of a model; sigma 0 returns an identical copy. */
BS_API bs_status bs_model_perturb(const bs_model* model, double sigma, uint64_t seed, bs_model** out);

/* Synthetic corpora. `mix` holds BS_FAMILY_COUNT weights or is NULL for the
 * default mix. */
BS_API bs_status bs_corpus_generate(int count, uint64_t seed, const double* mix, const bs_config* config,
                                    bs_corpus** out);
BS_API size_t bs_corpus_size(const bs_corpus* corpus);
BS_API bs_status bs_corpus_model(const bs_corpus* corpus, size_t index, bs_model** out);
/* {"family":..,"seed":..,"params":{..}} */
BS_API bs_status bs_corpus_spec_json(const bs_corpus* corpus, size_t index, char** out_json);
/* {"faces":[{"n":N,"planar":bool,"points":[[x,y,z],...]}]} in model coordinates. */
BS_API bs_status bs_corpus_truth_json(const bs_corpus* corpus, size_t index, char** out_json);
/* {"line":..,"arc":..,"complex":..} edge-occurrence fractions. */
BS_API bs_status bs_corpus_edge_mix_json(const bs_corpus* corpus, char** out_json);
BS_API void bs_corpus_free(bs_corpus* corpus);

/* Curve codebook. */
BS_API bs_status bs_codebook_fit(const bs_model* const* models, size_t count, uint64_t seed,
                                 const bs_config* config, bs_codebook** out);
BS_API bs_status bs_codebook_load(const char* path, bs_codebook** out);
BS_API bs_status bs_codebook_save(const bs_codebook* book, const char* path);
BS_API void bs_codebook_free(bs_codebook* book);

/* Token sequences. `book` may be NULL for models without complex edges. */
BS_API bs_status bs_encode(const bs_model* model, const bs_codebook* book, const bs_config* config,
                           int32_t** out_tokens, size_t* out_count);
BS_API bs_status bs_decode(const int32_t* tokens, size_t count, const bs_codebook* book,
                           const bs_config* config, bs_model** out);
/* {"tokens":[...]} */
BS_API bs_status bs_tokens_to_json(const int32_t* tokens, size_t count, char** out_json);
BS_API bs_status bs_tokens_from_json(const char* json, int32_t** out_tokens, size_t* out_count);
/* {"indices":[[face,loop,type,geom,intra],...]} one row per token. */
BS_API bs_status bs_structural_indices_json(const int32_t* tokens, size_t count, const bs_config* config,
                                            char** out_json);

/* Merge a per-face model into a B-rep graph.
 * {"graph":{..},"validity":{"valid":..,"defects":[..],"cc":..}} */
BS_API bs_status bs_merge(const bs_model* model, const bs_config* config, char** out_json);

/* Per-face analytic priors, D4-canonicalized, with the primitive fit. When
 * `truth_json` (from bs_corpus_truth_json) is given each face also carries
 * its target grid in the prior's frame and orientation. */
BS_API bs_status bs_prior(const bs_model* model, const bs_config* config, const char* truth_json,
                          char** out_json);

/* Round trip encode -> decode -> merge against the source. */
BS_API bs_status bs_roundtrip(const bs_model* model, const bs_codebook* book, const bs_config* config,
                              char** out_json);
/* {"models":[..],"passed":k,"pass_rate":r}; `threads` 0 picks the hardware count. */
BS_API bs_status bs_roundtrip_corpus(const bs_model* const* models, size_t count, const bs_codebook* book,
                                     const bs_config* config, unsigned threads, char** out_json);

/* Noise protocol: {"rows":[{"sigma":..,"mean_chamfer":..,"validity_rate":..,...}]} */
BS_API bs_status bs_stress(const bs_model* const* models, size_t count, const bs_codebook* book,
                           const double* sigmas, size_t sigma_count, uint64_t seed, const bs_config* config,
                           unsigned threads, char** out_json);

/* {"cov_cd","cov_emd","mmd_cd","mmd_emd","jsd_cd_proxy","rows"} */
BS_API bs_status bs_metrics(const bs_model* const* generated, size_t generated_count,
                            const bs_model* const* reference, size_t reference_count, const bs_config* config,
                            unsigned threads, size_t emd_points, char** out_json);

/* Grammar automaton. */
BS_API bs_status bs_grammar_new(const bs_config* config, bs_grammar** out);
BS_API void bs_grammar_free(bs_grammar* grammar);
/* Ids accepted after `prefix`. An empty prefix yields SOS only. */
BS_API bs_status bs_grammar_valid_ids(const bs_grammar* grammar, const int32_t* prefix, size_t count,
                                      int32_t** out_ids, size_t* out_count);
/* One request line of the grammar-serve protocol; always produces a
 * response line (without trailing newline) unless allocation fails. */
BS_API bs_status bs_grammar_serve_line(const bs_grammar* grammar, const char* request, char** out_response);

#ifdef __cplusplus
}
#endif

#endif
