#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "besi/types.hpp"

namespace besi::io {

/// Binary container: "BESI", version byte, kind byte, two reserved zero
/// bytes, then little-endian u64 dimensions and f64 payload (row-major).
/// docs/formats.md gives the per-kind layout.
enum class Kind : std::uint8_t { LeadField = 1, SourceSpace = 2, Measurement = 3, Estimate = 4 };

inline constexpr std::uint8_t kVersion = 1;

/// Reads only the header. Throws ConfigError for a malformed file.
Kind peek_kind(const std::filesystem::path& path);

void write(const std::filesystem::path& path, const LeadField& value);
void write(const std::filesystem::path& path, const SourceSpace& value);
void write(const std::filesystem::path& path, const Measurement& value);
void write(const std::filesystem::path& path, const SourceEstimate& value);

LeadField read_lead_field(const std::filesystem::path& path);
SourceSpace read_source_space(const std::filesystem::path& path);
Measurement read_measurement(const std::filesystem::path& path);
SourceEstimate read_estimate(const std::filesystem::path& path);

/// Comma-separated rows with 17 significant digits. Lines starting with
/// '#' are comments and skipped on read.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& value,
                      const std::string& comment = "");
Matrix read_matrix_csv(const std::filesystem::path& path);

struct GroundTruthRow {
    std::int64_t trial_id = 0;
    std::int64_t source_index = 0;
    double depth_mm = 0.0;
    Vector moment;
    double noise_percent = 0.0;
    std::uint64_t seed = 0;
};

/// Columns trial_id,source_index,depth_mm,moment,noise_percent,seed; the
/// moment components are joined with ';'.
void write_ground_truth_csv(const std::filesystem::path& path,
                            const std::vector<GroundTruthRow>& rows);
std::vector<GroundTruthRow> read_ground_truth_csv(const std::filesystem::path& path);

/// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(const std::string& line, char sep = ',');

/// %.17g formatting, "nan" for NaN.
std::string format_double(double value);
/// Inverse of format_double; accepts subnormals. Throws ConfigError naming
/// `where` for anything that is not a whole number token.
double parse_double(const std::string& text, const std::string& where);

/// Writes `contents` to a temporary sibling and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace besi::io
