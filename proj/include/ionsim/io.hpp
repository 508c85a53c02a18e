#pragma once

// CSV serialization and atomic file output for the batch front-end. All
// numbers are written with %.17g so re-running a job reproduces byte-identical
// files.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ionsim/noise.hpp"

namespace ionsim {

std::string format_g17(double v);

/// FNV-1a 64-bit, used to stamp output files with a config hash.
std::uint64_t fnv1a64(std::string_view data);

/// Header `t_s,phi_rad,p_est,shots`; optional `# ...` comment lines first.
std::string fringe_csv(const FringeDataset& dataset, const std::string& header_comment = "");

/// Header `N_b,sigma,delta_phi` (plus `sql_delta_phi` when requested).
std::string allan_csv(const AllanResult& result, bool with_sql_column,
                      const std::string& header_comment = "");

/// Writes content to path via a temporary file and rename; removes the
/// temporary on failure.
void write_file_atomic(const std::string& path, const std::string& content);

/// Stages every file to a temporary first, then renames them all, so a failed
/// job leaves no partial outputs behind.
void write_files_atomic(const std::vector<std::pair<std::string, std::string>>& files);

std::string read_file(const std::string& path);

}  // namespace ionsim
