#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mwt/inversion.hpp"

namespace mwt {

/// Effective parameters of one CLI run. Serialised verbatim into every manifest.
struct RunConfig {
  std::string command;
  std::string phantom = "austria";
  int grid_n = 182;
  double frequency_hz = 4e8;
  double half_side = 1.0;
  double radius = 3.0;
  int n_tx = 16;
  int n_rx = 32;
  double noise_percent = 5.0;
  std::string method = "ssd";   // bp | ssd | tv | none
  std::string prior = "weights";  // zero | smooth | weights
  std::string weights;
  std::string input;  // bundle directory (reconstruct, eval)
  std::string gt;     // eval: ground-truth raster, defaults to <input>/phantom.mwti
  std::vector<std::string> recons;  // eval: name=path.mwti
  std::string out;
  int threads = 1;
  ReconstructionConfig recon;
};

nlohmann::json to_json(const RunConfig& c);
/// Overlay the keys present in `j` onto `c`; unknown keys throw std::invalid_argument.
void apply_json(RunConfig& c, const nlohmann::json& j);

std::string code_version();

/// Output directory: `out` if set, else $MWT_DATA_DIR/<fallback>, else ./mwt_data/<fallback>.
std::filesystem::path resolve_output(const RunConfig& c, const std::string& fallback);

/// Command bodies; each returns the process exit code and writes a manifest.json.
int cmd_simulate(const RunConfig& c, std::ostream& log);
int cmd_reconstruct(const RunConfig& c, std::ostream& log);
int cmd_eval(const RunConfig& c, std::ostream& log);
int cmd_dump_kernel(const RunConfig& c, std::ostream& log);
int cmd_selftest(const RunConfig& c, std::ostream& log);

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitSolverFailure = 3;

}  // namespace mwt
