#pragma once

#include <cstdint>
#include <string>

namespace brepseq {

/// Pipeline-wide hyper-parameters. Defaults mirror the reference setup; every
/// field can be overridden from a JSON config file.
struct Config {
  int grid_n = 32;  // face-grid side and per-curve sample count
  int bits = 10;
  int codebook_size = 256;
  int rq_levels = 3;
  int curve_tokens = 12;
  int max_faces = 70;
  int max_loops = 15;
  int max_entities = 30;  // vertices + edges per loop
  int max_seq_len = 8000;
  double eps_edge = 4.0 / 1023.0;
  double eps_endpoint = 1e-6;
  double tau_fscore = 0.02;
  double nucleus_p = 0.95;

  int quant_levels() const { return 1 << bits; }
  /// Largest number of (vertex, edge) entries a loop may hold.
  int max_loop_entries() const { return max_entities / 2; }

  /// Throws Error(kInvalidArgument) naming the first bad field.
  void validate() const;

  static Config from_json(const std::string& text);
  static Config load(const std::string& path);
  std::string to_json() const;
};

}  // namespace brepseq
