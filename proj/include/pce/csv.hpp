#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "pce/core.hpp"

namespace pce {

// Crossover schema, one row per subject:
//   subject_id,sequence,x_<name>...,t_p1,t_p2,a_p1,a_p2,y_p1,y_p2
// sequence in {CF, EF}; a in {0, 1, NA, empty}; y decimal, NA or empty.
//
// Parallel schema, one row per subject-arm:
//   subject_id,treatment,x_<name>...,a,y
//
// Missing values are read from "" or "NA" and written as "NA". Reals are
// written in shortest round-trip form, so write(load(f)) is bit-exact.

enum class CsvKind { Crossover, Parallel };

CrossoverData read_crossover_csv(std::istream& in);
CrossoverData load_crossover_csv(const std::filesystem::path& path);
void write_crossover_csv(std::ostream& out, const CrossoverData& data);
void save_crossover_csv(const std::filesystem::path& path, const CrossoverData& data);

ParallelData read_parallel_csv(std::istream& in);
ParallelData load_parallel_csv(const std::filesystem::path& path);
void write_parallel_csv(std::ostream& out, const ParallelData& data);
void save_parallel_csv(const std::filesystem::path& path, const ParallelData& data);

// Decided from the header row.
CsvKind detect_csv_kind(const std::filesystem::path& path);

std::string format_real(double v);
std::string format_optional(const std::optional<double>& v);

}  // namespace pce
