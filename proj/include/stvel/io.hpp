#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stvel/analytic.hpp"
#include "stvel/grid.hpp"
#include "stvel/stfit.hpp"
#include "stvel/temporal.hpp"

namespace stvel {

/// Every output file starts with "# schema=<name> config=<hash>"; readers
/// skip any number of leading comment lines. Missing values are written as
/// empty fields and parsed back to missing.

/// FNV-1a 64-bit over the canonical configuration string.
std::uint64_t config_hash(const std::string& canonical);
std::string hash_hex(std::uint64_t h);

struct FileMeta {
  std::string schema;
  std::string config = "0000000000000000";
};

void write_pattern_csv(const std::string& path, const PointPattern& pattern,
                       const FileMeta& meta);
PointPattern read_pattern_csv(const std::string& path);

/// Long-format grid field: one "# grid ..." line with the geometry, then
/// x,y,t,value rows in storage order.
void write_field_csv(const std::string& path, const ScalarField& field,
                     const FileMeta& meta);
ScalarField read_field_csv(const std::string& path);

/// Velocity table x,y,t,smin,vx,vy in storage order.
void write_velocity_csv(const std::string& path, const VectorField& field,
                        const FileMeta& meta);

/// One spatial slice: x,y,value rows.
void write_slice_csv(const std::string& path, const SpatialSlice& slice,
                     const FileMeta& meta);

/// Ground-truth table x,y,t,lambda,dldx,dldy,dldt,smin,vx,vy at the centers
/// of `grid` for the time points listed.
void write_oracle_csv(const std::string& path, const SimIntensity& intensity,
                      const SpatioTemporalGrid& grid,
                      const std::vector<double>& times, const FileMeta& meta);

/// Two-column t,count reader (header optional, comments skipped).
struct CountsSeries {
  std::vector<double> times;
  std::vector<double> counts;
};
CountsSeries read_counts_csv(const std::string& path);

/// Two-column x,y reader for kernel-density inputs.
std::vector<Point2> read_points_csv(const std::string& path);

std::string temporal_fit_to_json(const TemporalFit& fit, const FileMeta& meta);
TemporalFit temporal_fit_from_json(const std::string& text);

std::string fit_result_to_json(const FitResult& result, const FileMeta& meta);
FitResult fit_result_from_json(const std::string& text);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/// Canonical number formatting used by every writer (round-trips exactly).
std::string format_double(double v);

}  // namespace stvel
