#include "brepseq/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "brepseq/error.hpp"

namespace brepseq {

using nlohmann::json;

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kSchema, std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace

void Config::validate() const {
  auto require = [](bool ok, const char* field) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, std::string("config: invalid ") + field);
  };
  require(grid_n > 1, "grid_n");
  require(bits > 0 && bits <= 16, "bits");
  require(codebook_size > 0, "codebook_size");
  require(rq_levels > 0, "rq_levels");
  require(curve_tokens > 0 && curve_tokens % rq_levels == 0, "curve_tokens");
  require((grid_n * 3) % (curve_tokens / rq_levels) == 0, "curve_tokens (segment split)");
  require(max_faces > 0, "max_faces");
  require(max_loops > 0, "max_loops");
  require(max_entities >= 4, "max_entities");
  require(max_seq_len > 0, "max_seq_len");
  require(eps_edge > 0, "eps_edge");
  require(eps_endpoint > 0, "eps_endpoint");
  require(tau_fscore > 0, "tau_fscore");
  require(nucleus_p > 0 && nucleus_p <= 1, "nucleus_p");
}

Config Config::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kSchema, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kSchema, "config: expected a JSON object");
  static const char* kKnown[] = {"N",         "grid_n",       "bits",        "s",
                                 "codebook_size", "L",        "rq_levels",   "curve_tokens",
                                 "M_f",       "max_faces",    "M_l",         "max_loops",
                                 "N_g",       "max_entities", "max_seq_len", "eps_edge",
                                 "eps_endpoint", "tau_fscore", "nucleus_p"};
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* k : kKnown) known = known || key == k;
    if (!known) throw Error(ErrorCode::kSchema, "config: unknown field '" + key + "'");
  }
  Config c;
  read_field(j, "N", c.grid_n);
  read_field(j, "grid_n", c.grid_n);
  read_field(j, "bits", c.bits);
  read_field(j, "s", c.codebook_size);
  read_field(j, "codebook_size", c.codebook_size);
  read_field(j, "L", c.rq_levels);
  read_field(j, "rq_levels", c.rq_levels);
  read_field(j, "curve_tokens", c.curve_tokens);
  read_field(j, "M_f", c.max_faces);
  read_field(j, "max_faces", c.max_faces);
  read_field(j, "M_l", c.max_loops);
  read_field(j, "max_loops", c.max_loops);
  read_field(j, "N_g", c.max_entities);
  read_field(j, "max_entities", c.max_entities);
  read_field(j, "max_seq_len", c.max_seq_len);
  read_field(j, "eps_edge", c.eps_edge);
  read_field(j, "eps_endpoint", c.eps_endpoint);
  read_field(j, "tau_fscore", c.tau_fscore);
  read_field(j, "nucleus_p", c.nucleus_p);
  c.validate();
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string Config::to_json() const {
  json j = {{"grid_n", grid_n},         {"bits", bits},
            {"codebook_size", codebook_size}, {"rq_levels", rq_levels},
            {"curve_tokens", curve_tokens}, {"max_faces", max_faces},
            {"max_loops", max_loops},   {"max_entities", max_entities},
            {"max_seq_len", max_seq_len}, {"eps_edge", eps_edge},
            {"eps_endpoint", eps_endpoint}, {"tau_fscore", tau_fscore},
            {"nucleus_p", nucleus_p}};
  return j.dump(2);
}

}  // namespace brepseq
