#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "tminimax/design.hpp"
#include "tminimax/simulate.hpp"

namespace tminimax {

enum class TableFormat { Csv, Json };

TableFormat parse_format(const std::string& name);

// Matrix CSV: header "unit,t1,...,tT" followed by one row per unit
// "i,y_i1,...,y_iT" with i = 1..N in order. Values are written with 17
// significant digits so a round trip is exact.
Matrix parse_matrix_csv(std::string_view text);
std::string format_matrix_csv(const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

// Assignment CSV: the 0/1 matrix in the layout above. Labels are inferred from
// the rows; a row that is neither 0, 1, a pulse nor a wedge is a parse error.
// The family is wedge if any row has a run of two or more ones that is not
// all ones, pulse otherwise, unless `family` forces it.
AssignmentMatrix parse_assignment_csv(std::string_view text, std::optional<ArmFamily> family = std::nullopt);
std::string format_assignment_csv(const AssignmentMatrix& Z);
AssignmentMatrix read_assignment_csv(const std::filesystem::path& path, std::optional<ArmFamily> family = std::nullopt);

// Schedule JSON: {"N": n, "T": T, "arms": {"always0": [[...], ...], "always1": ..., "pulse_2": ...}}.
PotentialOutcomeSchedule parse_schedule_json(std::string_view text);
std::string format_schedule_json(const PotentialOutcomeSchedule& sched);
PotentialOutcomeSchedule read_schedule_json(const std::filesystem::path& path);

// Deterministic bytes for a fixed table. JSON is an array of objects with
// sorted keys.
std::string format_table(const Table& table, TableFormat format);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_table(const std::filesystem::path& path, const Table& table, TableFormat format);

std::string format_double(double x);

}  // namespace tminimax
