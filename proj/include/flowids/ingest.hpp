#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flowids {

// Rectangular table of raw flow records. Cells stay strings until feature
// assembly; column names are whitespace-trimmed and unique.
struct FlowTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> source_files;

    size_t column_index(const std::string& name) const;  // throws if absent
    bool has_column(const std::string& name) const;
};

struct CleanReport {
    size_t rows_in = 0;
    size_t rows_dropped_missing = 0;
    size_t rows_dropped_nonfinite = 0;
    size_t rows_dropped_duplicate = 0;
    size_t rows_out = 0;
};

struct LabelVector {
    std::vector<uint8_t> values;                // 0 = benign, 1 = attack
    std::vector<std::string> original_labels;   // raw strings, parallel
};

// Loads one or more RFC-4180-style CSV files sharing an identical trimmed
// header, concatenating rows in path order. Fully empty lines are skipped.
FlowTable load_csv(const std::vector<std::string>& paths);

struct CleanResult {
    FlowTable table;
    CleanReport report;
};

// Drops, in order: rows with an empty cell or a NaN token, rows with an
// Infinity token (or numeric overflow), exact duplicate rows (first kept).
// Each tally is counted against the survivor set of the previous step.
CleanResult clean(FlowTable table);

LabelVector binarize_labels(const FlowTable& table, const std::string& label_column);

}  // namespace flowids
