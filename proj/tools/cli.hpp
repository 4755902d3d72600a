#pragma once

// Command implementations behind the `deepcam` executable.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "deepcam/network.hpp"

namespace deepcam::cli {

enum ExitCode : int {
  kOk = 0,
  kValidation = 1,
  kIo = 2,
  kInternal = 3,
};

/// Hash-length source: "uniform:<k>", "list:<k1>,<k2>,..." or "file:<path>"
/// (a tune result). Returns one length per dot layer.
std::vector<std::size_t> resolve_hash_spec(const std::string& spec, std::size_t dot_layers);

/// Parses "CxHxW" (or "HxW" for one channel).
Dims parse_dims(const std::string& text);

struct DotbenchConfig {
  std::vector<std::size_t> ks{64, 128, 256, 512, 1024};
  std::size_t trials = 1000;
  std::size_t dim = 16;
  std::size_t pair_seeds = 100;
  std::uint64_t seed = 0;
};

struct DotbenchRow {
  std::string kind;     ///< "random" or "worked_pair"
  std::size_t k = 0;
  std::string variant;  ///< "piecewise" or "exact_cos"
  std::size_t trials = 0;
  double algebraic = 0;      ///< worked_pair only
  double median_approx = 0;  ///< worked_pair only
  double median_abs = 0, p95_abs = 0, median_rel = 0, p95_rel = 0;
};

/// Monte-Carlo error of the approximate dot product against the algebraic
/// one. Random rows use standard-normal pairs of length `dim`, one fresh
/// projection per pair; the shorter hashes are prefixes of the longest.
/// With trials == 0 nothing is produced.
std::vector<DotbenchRow> dotbench(const DotbenchConfig& cfg);

/// Header: kind,k,variant,trials,algebraic,median_approx,median_abs_err,
/// p95_abs_err,median_rel_err,p95_rel_err
std::string dotbench_csv(const std::vector<DotbenchRow>& rows);

/// Linear-interpolated quantile (q in [0, 1]) of unsorted values.
double quantile(std::vector<double> values, double q);

/// Full command line without the program name. Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deepcam::cli
