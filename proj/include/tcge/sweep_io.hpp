#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tcge/estimators.hpp"
#include "tcge/scaling_analysis.hpp"

namespace tcge {

inline constexpr const char* kSweepHeader =
    "beta,E_per_link,E_err,GE,GE_err,GEt,GEt_err,Q,Q_err,dGEt_dbeta,dGEt_err,n_measure,seed";
inline constexpr const char* kFeeHeader = "r,f_EE,f_err,n_classes";

// Shortest round-trip decimal form, so rewriting a parsed file is lossless.
std::string format_number(double value);

// Per-size file name inside a sweep directory: sweep_L<size>.csv.
std::string sweep_file_name(int size);
// Size encoded in a sweep file name, or nullopt if the name does not match.
std::optional<int> size_from_sweep_file(const std::string& name);

// Throws std::runtime_error on I/O failure.
void write_sweep_csv(const std::filesystem::path& path, const SweepSeries& series);
// Validates the header and every field; throws std::runtime_error on a
// schema violation, non-finite number or unsorted beta column.
SweepSeries read_sweep_csv(const std::filesystem::path& path, int size);

void write_fee_csv(const std::filesystem::path& path, std::span<const FeePoint> profile);
std::vector<FeePoint> read_fee_csv(const std::filesystem::path& path);

// Truncates `path` and writes `text`; throws std::runtime_error on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace tcge
