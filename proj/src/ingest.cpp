#include "flowids/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "flowids/util.hpp"

namespace flowids {

size_t FlowTable::column_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw Error("column not found: \"" + name + "\"");
}

bool FlowTable::has_column(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

namespace {

// RFC-4180 field splitting over one physical file. Quoted fields may contain
// commas, doubled quotes, and newlines; CRLF is normalized away.
struct CsvReader {
    explicit CsvReader(std::string text) : text_(std::move(text)) {}

    // Returns false at end of input. Skips fully empty lines.
    bool next_record(std::vector<std::string>& fields, size_t& line_no) {
        fields.clear();
        while (pos_ < text_.size()) {
            line_no = line_;
            if (text_[pos_] == '\n') {  // empty line
                ++pos_;
                ++line_;
                continue;
            }
            if (text_[pos_] == '\r' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '\n') {
                pos_ += 2;
                ++line_;
                continue;
            }
            parse_record(fields);
            return true;
        }
        return false;
    }

private:
    void parse_record(std::vector<std::string>& fields) {
        std::string cur;
        bool quoted = false;
        for (;;) {
            if (pos_ >= text_.size()) {
                fields.push_back(std::move(cur));
                return;
            }
            char c = text_[pos_];
            if (quoted) {
                if (c == '"') {
                    if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
                        cur.push_back('"');
                        pos_ += 2;
                    } else {
                        quoted = false;
                        ++pos_;
                    }
                } else {
                    if (c == '\n') ++line_;
                    cur.push_back(c);
                    ++pos_;
                }
                continue;
            }
            switch (c) {
                case '"':
                    quoted = true;
                    ++pos_;
                    break;
                case ',':
                    fields.push_back(std::move(cur));
                    cur.clear();
                    ++pos_;
                    break;
                case '\r':
                    ++pos_;  // swallow; LF handled next
                    break;
                case '\n':
                    fields.push_back(std::move(cur));
                    ++pos_;
                    ++line_;
                    return;
                default:
                    cur.push_back(c);
                    ++pos_;
            }
        }
    }

    std::string text_;
    size_t pos_ = 0;
    size_t line_ = 1;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> trim_all(const std::vector<std::string>& fields) {
    std::vector<std::string> out;
    out.reserve(fields.size());
    for (const auto& f : fields) out.push_back(trim(f));
    return out;
}

}  // namespace

FlowTable load_csv(const std::vector<std::string>& paths) {
    if (paths.empty()) throw Error("load_csv: no input files given");

    FlowTable table;
    for (const auto& path : paths) {
        CsvReader reader(read_file(path));
        std::vector<std::string> fields;
        size_t line_no = 0;
        if (!reader.next_record(fields, line_no))
            throw Error("file has no header row: " + path);

        std::vector<std::string> header = trim_all(fields);
        if (table.columns.empty()) {
            std::unordered_set<std::string> seen;
            for (const auto& c : header)
                if (!seen.insert(c).second)
                    throw Error("duplicate column name \"" + c + "\" in " + path);
            table.columns = header;
        } else if (header != table.columns) {
            throw Error("header mismatch: " + path + " does not match " +
                        table.source_files.front());
        }

        while (reader.next_record(fields, line_no)) {
            if (fields.size() != table.columns.size())
                throw Error(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(table.columns.size()) + " cells, got " +
                            std::to_string(fields.size()));
            table.rows.push_back(std::move(fields));
        }
        table.source_files.push_back(path);
    }
    return table;
}

CleanResult clean(FlowTable table) {
    if (table.rows.empty()) throw Error("clean: input table has no rows");

    CleanReport report;
    report.rows_in = table.rows.size();

    auto has_missing = [](const std::vector<std::string>& row) {
        for (const auto& cell : row) {
            if (trim_view(cell).empty()) return true;
            if (classify_number(cell).cls == NumberClass::NaN) return true;
        }
        return false;
    };
    auto has_nonfinite = [](const std::vector<std::string>& row) {
        for (const auto& cell : row)
            if (classify_number(cell).cls == NumberClass::Infinite) return true;
        return false;
    };

    auto drop_if = [&table](auto pred) {
        size_t kept = 0, dropped = 0;
        for (size_t i = 0; i < table.rows.size(); ++i) {
            if (pred(table.rows[i])) {
                ++dropped;
            } else {
                if (kept != i) table.rows[kept] = std::move(table.rows[i]);
                ++kept;
            }
        }
        table.rows.resize(kept);
        return dropped;
    };

    report.rows_dropped_missing = drop_if(has_missing);
    report.rows_dropped_nonfinite = drop_if(has_nonfinite);

    std::unordered_set<std::string> seen;
    seen.reserve(table.rows.size());
    report.rows_dropped_duplicate = drop_if([&seen](const std::vector<std::string>& row) {
        std::string key;
        size_t len = row.size();
        for (const auto& c : row) len += c.size();
        key.reserve(len);
        for (const auto& c : row) {
            key += c;
            key.push_back('\x1f');
        }
        return !seen.insert(std::move(key)).second;
    });

    report.rows_out = table.rows.size();
    if (report.rows_out == 0) throw Error("clean: all rows dropped, output table is empty");
    return {std::move(table), report};
}

LabelVector binarize_labels(const FlowTable& table, const std::string& label_column) {
    size_t col = table.column_index(label_column);
    LabelVector out;
    out.values.reserve(table.rows.size());
    out.original_labels.reserve(table.rows.size());
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const std::string& raw = table.rows[i][col];
        std::string_view t = trim_view(raw);
        if (t.empty())
            throw Error("binarize_labels: empty label in row " + std::to_string(i));
        out.values.push_back(iequals(t, "BENIGN") ? 0 : 1);
        out.original_labels.push_back(raw);
    }
    return out;
}

}  // namespace flowids
