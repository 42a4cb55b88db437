// brepseq command-line driver. Talks to the library only through brepseq.h.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "brepseq/brepseq.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(bs_status s, const std::string& what) {
  if (s != BS_OK) throw Failure(what + ": " + bs_status_name(s) + ": " + bs_last_error());
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(std::exchange(o.p, nullptr)) {}
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Config = Handle<bs_config, bs_config_free>;
using Model = Handle<bs_model, bs_model_free>;
using Book = Handle<bs_codebook, bs_codebook_free>;
using Corpus = Handle<bs_corpus, bs_corpus_free>;
using Grammar = Handle<bs_grammar, bs_grammar_free>;

// Takes ownership of a library string.
std::string take(char* s) {
  std::string out = s ? s : "";
  bs_string_free(s);
  return out;
}

std::vector<int32_t> take(int32_t* t, size_t n) {
  std::vector<int32_t> out(t, t + n);
  bs_tokens_free(t);
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Failure("cannot write " + path.string());
  if (!text.empty() && text.back() != '\n') out << '\n';
}

void need_file(const std::string& path, const char* flag) {
  if (!fs::is_regular_file(path)) throw UsageError(std::string(flag) + ": no such file: " + path);
}

void need_dir(const std::string& path, const char* flag) {
  if (!fs::is_directory(path)) throw UsageError(std::string(flag) + ": no such directory: " + path);
}

struct Common {
  std::string config_path;
  unsigned threads = 0;

  Config load_config() const {
    Config c;
    if (config_path.empty())
      check(bs_config_default(c.out()), "config");
    else
      check(bs_config_load(config_path.c_str(), c.out()), "config " + config_path);
    return c;
  }
};

Model load_model(const std::string& path, const Config& cfg) {
  Model m;
  check(bs_model_load(path.c_str(), cfg.get(), m.out()), "model " + path);
  return m;
}

Book load_book(const std::string& path) {
  Book b;
  if (!path.empty()) check(bs_codebook_load(path.c_str(), b.out()), "codebook " + path);
  return b;
}

// Model files of a corpus directory: the manifest's list when present,
// otherwise every *.json file in name order.
std::vector<fs::path> corpus_files(const fs::path& dir) {
  std::vector<fs::path> files;
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest)) {
    json m;
    try {
      m = json::parse(read_file(manifest));
      for (const auto& e : m.at("models")) files.push_back(dir / e.at("file").get<std::string>());
    } catch (const json::exception& e) {
      throw Failure("manifest " + manifest.string() + ": " + e.what());
    }
    return files;
  }
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

struct LoadedCorpus {
  std::vector<fs::path> files;
  std::vector<Model> models;

  std::vector<const bs_model*> handles() const {
    std::vector<const bs_model*> out;
    for (const auto& m : models) out.push_back(m.get());
    return out;
  }
};

LoadedCorpus load_corpus(const std::string& dir, const Config& cfg) {
  LoadedCorpus c;
  c.files = corpus_files(dir);
  if (c.files.empty()) throw Failure("corpus " + dir + " holds no model files");
  for (const auto& f : c.files) c.models.push_back(load_model(f.string(), cfg));
  return c;
}

bool has_complex(const Model& m) {
  const json s = json::parse(take([&] {
    char* out = nullptr;
    check(bs_model_summary(m.get(), &out), "summary");
    return out;
  }()));
  return s["edges"]["complex"].get<std::size_t>() > 0;
}

// Codebook from --codebook, or fitted on the corpus when it has complex edges.
Book corpus_book(const std::string& path, const LoadedCorpus& corpus, const Config& cfg, uint64_t seed) {
  if (!path.empty()) return load_book(path);
  Book b;
  if (std::none_of(corpus.models.begin(), corpus.models.end(), has_complex)) return b;
  const auto h = corpus.handles();
  check(bs_codebook_fit(h.data(), h.size(), seed, cfg.get(), b.out()), "fit codebook");
  std::cerr << "note: no --codebook given; fitted one on the corpus (seed " << seed << ")\n";
  return b;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("not a number list: " + text);
    }
  }
  return out;
}

// ---- subcommands ----

struct SynthArgs {
  int count = 100;
  uint64_t seed = 0;
  std::string out, mix;
};

int run_synth(const SynthArgs& a, const Common& common) {
  const Config cfg = common.load_config();
  std::vector<double> mix;
  if (!a.mix.empty()) {
    mix = parse_list(a.mix);
    if (mix.size() != BS_FAMILY_COUNT) throw UsageError("--mix needs " + std::to_string(BS_FAMILY_COUNT) + " weights");
  }
  Corpus corpus;
  check(bs_corpus_generate(a.count, a.seed, mix.empty() ? nullptr : mix.data(), cfg.get(), corpus.out()), "synth");
  const fs::path dir(a.out);
  fs::create_directories(dir / "models");
  fs::create_directories(dir / "truth");
  json entries = json::array();
  for (size_t i = 0; i < bs_corpus_size(corpus.get()); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "model_%05zu.json", i);
    Model m;
    check(bs_corpus_model(corpus.get(), i, m.out()), "synth");
    char* out = nullptr;
    check(bs_corpus_spec_json(corpus.get(), i, &out), "synth");
    const json spec = json::parse(take(out));
    check(bs_corpus_truth_json(corpus.get(), i, &out), "synth");
    write_file(dir / "truth" / name, take(out));
    check(bs_model_save(m.get(), (dir / "models" / name).string().c_str()), "write model");
    entries.push_back({{"file", std::string("models/") + name}, {"truth", std::string("truth/") + name}, {"spec", spec}});
  }
  char* edge_mix = nullptr;
  check(bs_corpus_edge_mix_json(corpus.get(), &edge_mix), "synth");
  const json fractions = json::parse(take(edge_mix));
  json manifest{{"count", a.count}, {"seed", a.seed}, {"edge_mix", fractions}, {"models", entries}};
  if (!mix.empty()) manifest["family_mix"] = mix;
  write_file(dir / "manifest.json", manifest.dump(1));
  std::cout << "synth: " << a.count << " models in " << dir.string() << " (edges: line "
            << fractions["line"].get<double>() << ", arc " << fractions["arc"].get<double>() << ", complex "
            << fractions["complex"].get<double>() << ")\n";
  return 0;
}

struct EncodeArgs {
  std::string model, corpus, codebook, out, indices;
  uint64_t seed = 0;
};

// Tokens and structural indices of one model; writes <stem>.tokens.json and
// <stem>.index.json under `dir` when given.
std::pair<std::string, std::string> encode_one(const Model& m, const Book& book, const Config& cfg) {
  int32_t* t = nullptr;
  size_t n = 0;
  check(bs_encode(m.get(), book.get(), cfg.get(), &t, &n), "encode");
  const auto tokens = take(t, n);
  char* tj = nullptr;
  check(bs_tokens_to_json(tokens.data(), tokens.size(), &tj), "encode");
  char* ij = nullptr;
  check(bs_structural_indices_json(tokens.data(), tokens.size(), cfg.get(), &ij), "encode");
  return {take(tj), take(ij)};
}

int run_encode(const EncodeArgs& a, const Common& common) {
  const Config cfg = common.load_config();
  if (a.model.empty() == a.corpus.empty()) throw UsageError("encode needs exactly one of --model or --corpus");
  if (!a.model.empty()) {
    need_file(a.model, "--model");
    const Model m = load_model(a.model, cfg);
    const Book book = load_book(a.codebook);
    const auto [tokens, indices] = encode_one(m, book, cfg);
    const std::size_t n = json::parse(tokens)["tokens"].size();
    if (a.out.empty())
      std::cout << tokens;
    else
      write_file(a.out, tokens);
    if (!a.indices.empty()) write_file(a.indices, indices);
    std::cerr << "encode: " << n << " tokens\n";
    return 0;
  }
  need_dir(a.corpus, "--corpus");
  if (a.out.empty()) throw UsageError("encode --corpus needs --out <dir>");
  const LoadedCorpus corpus = load_corpus(a.corpus, cfg);
  const Book book = corpus_book(a.codebook, corpus, cfg, a.seed);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  if (book.get() && a.codebook.empty()) check(bs_codebook_save(book.get(), (dir / "codebook.bin").string().c_str()), "save codebook");
  std::size_t done = 0, failed = 0;
  for (std::size_t i = 0; i < corpus.models.size(); ++i) {
    const std::string stem = corpus.files[i].stem().string();
    try {
      const auto [tokens, indices] = encode_one(corpus.models[i], book, cfg);
      write_file(dir / (stem + ".tokens.json"), tokens);
      write_file(dir / (stem + ".index.json"), indices);
      ++done;
    } catch (const Failure& e) {
      std::cerr << stem << ": " << e.what() << "\n";
      ++failed;
    }
  }
  std::cout << "encode: " << done << " sequences written to " << dir.string() << ", " << failed << " failed\n";
  return failed ? kExitFailure : 0;
}

struct DecodeArgs {
  std::string tokens, codebook, out;
};

int run_decode(const DecodeArgs& a, const Common& common) {
  need_file(a.tokens, "--tokens");
  const Config cfg = common.load_config();
  const Book book = load_book(a.codebook);
  int32_t* t = nullptr;
  size_t n = 0;
  check(bs_tokens_from_json(read_file(a.tokens).c_str(), &t, &n), "tokens " + a.tokens);
  const auto tokens = take(t, n);
  Model m;
  if (bs_decode(tokens.data(), tokens.size(), book.get(), cfg.get(), m.out()) != BS_OK) {
    std::cerr << "decode: " << bs_last_error_json() << "\n";
    return kExitFailure;
  }
  char* text = nullptr;
  check(bs_model_to_json(m.get(), &text), "decode");
  const std::string model = take(text);
  if (a.out.empty())
    std::cout << model;
  else
    write_file(a.out, model);
  char* summary = nullptr;
  check(bs_model_summary(m.get(), &summary), "decode");
  std::cerr << "decode: " << take(summary) << "\n";
  return 0;
}

struct MergeArgs {
  std::string model, out;
};

int run_merge(const MergeArgs& a, const Common& common) {
  need_file(a.model, "--model");
  const Config cfg = common.load_config();
  const Model m = load_model(a.model, cfg);
  char* out = nullptr;
  check(bs_merge(m.get(), cfg.get(), &out), "merge");
  const json report = json::parse(take(out));
  if (a.out.empty())
    std::cout << report.dump(1) << "\n";
  else
    write_file(a.out, report.dump(1));
  const auto& g = report["graph"];
  const auto& v = report["validity"];
  std::cerr << "merge: V " << g["vertices"].size() << " E " << g["edges"].size() << " F " << g["faces"].size()
            << " cc " << v["cc"] << " valid " << v["valid"] << " defects " << v["defects"].size() << "\n";
  return v["valid"].get<bool>() ? 0 : kExitFailure;
}

struct PriorArgs {
  std::string model, truth, corpus, out;
};

std::string prior_json(const Model& m, const Config& cfg, const std::string& truth_path) {
  const std::string truth = truth_path.empty() ? std::string() : read_file(truth_path);
  char* out = nullptr;
  check(bs_prior(m.get(), cfg.get(), truth_path.empty() ? nullptr : truth.c_str(), &out), "prior");
  return take(out);
}

int run_prior(const PriorArgs& a, const Common& common) {
  const Config cfg = common.load_config();
  if (a.model.empty() == a.corpus.empty()) throw UsageError("prior needs exactly one of --model or --corpus");
  if (!a.model.empty()) {
    need_file(a.model, "--model");
    if (!a.truth.empty()) need_file(a.truth, "--truth");
    const std::string grids = prior_json(load_model(a.model, cfg), cfg, a.truth);
    if (a.out.empty())
      std::cout << grids << "\n";
    else
      write_file(a.out, grids);
    std::cerr << "prior: " << json::parse(grids)["faces"].size() << " face grids\n";
    return 0;
  }
  need_dir(a.corpus, "--corpus");
  if (a.out.empty()) throw UsageError("prior --corpus needs --out <dir>");
  const fs::path dir(a.corpus);
  const auto files = corpus_files(dir);
  std::map<std::string, std::string> truth;
  if (fs::exists(dir / "manifest.json"))
    for (const auto& e : json::parse(read_file(dir / "manifest.json"))["models"])
      if (e.contains("truth")) truth[(dir / e["file"].get<std::string>()).string()] = (dir / e["truth"].get<std::string>()).string();
  std::size_t faces = 0;
  for (const auto& f : files) {
    const auto it = truth.find(f.string());
    const std::string grids = prior_json(load_model(f.string(), cfg), cfg, it == truth.end() ? "" : it->second);
    faces += json::parse(grids)["faces"].size();
    write_file(fs::path(a.out) / (f.stem().string() + ".grids.json"), grids);
  }
  std::cout << "prior: " << faces << " face grids from " << files.size() << " models in " << a.out << "\n";
  return 0;
}

struct FitArgs {
  std::string corpus, out;
  uint64_t seed = 0;
};

int run_fit(const FitArgs& a, const Common& common) {
  need_dir(a.corpus, "--corpus");
  const Config cfg = common.load_config();
  const LoadedCorpus corpus = load_corpus(a.corpus, cfg);
  const auto h = corpus.handles();
  Book b;
  check(bs_codebook_fit(h.data(), h.size(), a.seed, cfg.get(), b.out()), "fit-codebook");
  check(bs_codebook_save(b.get(), a.out.c_str()), "save codebook");
  std::cout << "fit-codebook: " << h.size() << " models -> " << a.out << "\n";
  return 0;
}

struct MetricsArgs {
  std::string generated, reference, report;
  std::size_t emd_points = 256;
};

int run_metrics(const MetricsArgs& a, const Common& common) {
  need_dir(a.generated, "--generated");
  need_dir(a.reference, "--reference");
  const Config cfg = common.load_config();
  const LoadedCorpus gen = load_corpus(a.generated, cfg);
  const LoadedCorpus ref = load_corpus(a.reference, cfg);
  const auto g = gen.handles();
  const auto r = ref.handles();
  char* out = nullptr;
  check(bs_metrics(g.data(), g.size(), r.data(), r.size(), cfg.get(), common.threads, a.emd_points, &out), "metrics");
  const json report = json::parse(take(out));
  if (!a.report.empty()) write_file(a.report, report.dump(1));
  std::cout << "metrics: COV-CD " << report["cov_cd"] << " COV-EMD " << report["cov_emd"] << " MMD-CD "
            << report["mmd_cd"] << " MMD-EMD " << report["mmd_emd"] << " JSD " << report["jsd_cd_proxy"] << "\n";
  return 0;
}

struct RoundtripArgs {
  std::string corpus, codebook, report;
  uint64_t seed = 0;
};

int run_roundtrip(const RoundtripArgs& a, const Common& common) {
  need_dir(a.corpus, "--corpus");
  const Config cfg = common.load_config();
  const LoadedCorpus corpus = load_corpus(a.corpus, cfg);
  const Book book = corpus_book(a.codebook, corpus, cfg, a.seed);
  const auto h = corpus.handles();
  char* out = nullptr;
  check(bs_roundtrip_corpus(h.data(), h.size(), book.get(), cfg.get(), common.threads, &out), "roundtrip");
  json report = json::parse(take(out));
  for (std::size_t i = 0; i < corpus.files.size(); ++i) {
    auto& row = report["models"][i];
    row["file"] = corpus.files[i].filename().string();
    if (!row["pass"].get<bool>())
      std::cerr << corpus.files[i].filename().string() << ": FAIL " << row.value("reason", std::string()) << "\n";
  }
  if (!a.report.empty()) write_file(a.report, report.dump(1));
  std::cout << "roundtrip: " << report["passed"] << "/" << h.size() << " passed (rate " << report["pass_rate"]
            << ")\n";
  return report["passed"].get<std::size_t>() == h.size() ? 0 : kExitFailure;
}

struct StressArgs {
  std::string corpus, codebook, report, sigmas = "0,0.002,0.005,0.01";
  uint64_t seed = 0;
};

int run_stress(const StressArgs& a, const Common& common) {
  need_dir(a.corpus, "--corpus");
  const Config cfg = common.load_config();
  const std::vector<double> sigmas = parse_list(a.sigmas);
  const LoadedCorpus corpus = load_corpus(a.corpus, cfg);
  const Book book = corpus_book(a.codebook, corpus, cfg, a.seed);
  const auto h = corpus.handles();
  char* out = nullptr;
  check(bs_stress(h.data(), h.size(), book.get(), sigmas.data(), sigmas.size(), a.seed, cfg.get(), common.threads, &out),
        "stress");
  const json report = json::parse(take(out));
  if (!a.report.empty()) write_file(a.report, report.dump(1));
  std::printf("%-8s %-8s %-12s %-9s %-11s %s\n", "sigma", "models", "mean_cd", "valid", "counts_ok", "conflicts");
  for (const auto& r : report["rows"])
    std::printf("%-8g %-8zu %-12.4e %-9.3f %-11.3f %.3f\n", r["sigma"].get<double>(), r["models"].get<std::size_t>(),
                r["mean_chamfer"].get<double>(), r["validity_rate"].get<double>(),
                r["count_match_rate"].get<double>(), r["conflict_rate"].get<double>());
  return 0;
}

int run_grammar_serve(const Common& common) {
  const Config cfg = common.load_config();
  Grammar g;
  check(bs_grammar_new(cfg.get(), g.out()), "grammar");
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    char* out = nullptr;
    check(bs_grammar_serve_line(g.get(), line.c_str(), &out), "grammar-serve");
    std::cout << take(out) << "\n" << std::flush;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"brepseq: B-rep wireframe tokenization toolkit"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "JSON file overriding Config defaults")->check(CLI::ExistingFile);
  app.add_option("--threads", common.threads, "worker threads for corpus commands (0 = all cores)");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic corpus and manifest");
  s->add_option("--count", synth.count)->check(CLI::NonNegativeNumber);
  s->add_option("--seed", synth.seed);
  s->add_option("--out", synth.out)->required();
  s->add_option("--mix", synth.mix, "six comma-separated family weights");

  EncodeArgs encode;
  auto* e = app.add_subcommand("encode", "model -> token sequence");
  e->add_option("--model", encode.model);
  e->add_option("--corpus", encode.corpus);
  e->add_option("--codebook", encode.codebook)->check(CLI::ExistingFile);
  e->add_option("--out", encode.out);
  e->add_option("--indices", encode.indices, "also write structural indices (single model)");
  e->add_option("--seed", encode.seed, "codebook fit seed when --codebook is absent (corpus)");

  DecodeArgs decode;
  auto* d = app.add_subcommand("decode", "token sequence -> pre-merge model");
  d->add_option("--tokens", decode.tokens)->required();
  d->add_option("--codebook", decode.codebook)->check(CLI::ExistingFile);
  d->add_option("--out", decode.out);

  MergeArgs merge;
  auto* m = app.add_subcommand("merge", "merge a per-face model into a B-rep graph and check validity");
  m->add_option("--model", merge.model)->required();
  m->add_option("--out", merge.out);

  PriorArgs prior;
  auto* p = app.add_subcommand("prior", "per-face analytic surface priors");
  p->add_option("--model", prior.model);
  p->add_option("--truth", prior.truth, "truth grids from synth (single model)");
  p->add_option("--corpus", prior.corpus);
  p->add_option("--out", prior.out);

  FitArgs fit;
  auto* f = app.add_subcommand("fit-codebook", "fit the curve codebook on a corpus");
  f->add_option("--corpus", fit.corpus)->required();
  f->add_option("--seed", fit.seed);
  f->add_option("--out", fit.out)->required();

  MetricsArgs metrics;
  auto* me = app.add_subcommand("metrics", "COV, MMD and JSD between two corpora");
  me->add_option("--generated", metrics.generated)->required();
  me->add_option("--reference", metrics.reference)->required();
  me->add_option("--report", metrics.report);
  me->add_option("--emd-points", metrics.emd_points)->check(CLI::Range(1, 512));

  RoundtripArgs rt;
  auto* r = app.add_subcommand("roundtrip", "encode -> decode -> merge every corpus model");
  r->add_option("--corpus", rt.corpus)->required();
  r->add_option("--codebook", rt.codebook)->check(CLI::ExistingFile);
  r->add_option("--report", rt.report);
  r->add_option("--seed", rt.seed, "codebook fit seed when --codebook is absent");

  StressArgs stress;
  auto* st = app.add_subcommand("stress", "noise-robustness table");
  st->add_option("--corpus", stress.corpus)->required();
  st->add_option("--codebook", stress.codebook)->check(CLI::ExistingFile);
  st->add_option("--report", stress.report);
  st->add_option("--sigmas", stress.sigmas);
  st->add_option("--seed", stress.seed);

  auto* gs = app.add_subcommand("grammar-serve", "line-delimited JSON mask server on stdin/stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (s->parsed()) return run_synth(synth, common);
    if (e->parsed()) return run_encode(encode, common);
    if (d->parsed()) return run_decode(decode, common);
    if (m->parsed()) return run_merge(merge, common);
    if (p->parsed()) return run_prior(prior, common);
    if (f->parsed()) return run_fit(fit, common);
    if (me->parsed()) return run_metrics(metrics, common);
    if (r->parsed()) return run_roundtrip(rt, common);
    if (st->parsed()) return run_stress(stress, common);
    if (gs->parsed()) return run_grammar_serve(common);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
