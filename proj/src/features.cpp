#include "flowids/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "flowids/rng.hpp"
#include "flowids/util.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary matrix/weight formats are little-endian");

namespace flowids {

using ordered_json = nlohmann::ordered_json;

namespace {

const std::unordered_set<std::string>& identifier_columns() {
    static const std::unordered_set<std::string> cols = {"Flow ID", "Source IP",
                                                         "Destination IP", "Timestamp"};
    return cols;
}

bool numeric_less(const std::string& a, const std::string& b) {
    ParsedNumber pa = classify_number(a);
    ParsedNumber pb = classify_number(b);
    bool na = pa.cls == NumberClass::Finite;
    bool nb = pb.cls == NumberClass::Finite;
    if (na && nb) {
        if (pa.value != pb.value) return pa.value < pb.value;
        return a < b;
    }
    if (na != nb) return na;  // numbers order before non-numbers
    return a < b;
}

}  // namespace

SelectResult select_features(const FlowTable& table, const std::string& label_column) {
    size_t label_idx = table.column_index(label_column);

    SelectResult result;
    std::vector<size_t> kept_indices;
    for (size_t i = 0; i < table.columns.size(); ++i) {
        if (i == label_idx) continue;
        const std::string& name = table.columns[i];
        if (identifier_columns().count(name)) {
            result.schema.dropped_columns.push_back({name, "identifier"});
            continue;
        }
        if (name == "Protocol") {
            result.schema.categorical_columns.push_back(name);
        } else {
            result.schema.numeric_columns.push_back(name);
        }
        kept_indices.push_back(i);
    }
    if (result.schema.numeric_columns.empty())
        throw Error("select_features: no numeric feature columns remain");

    result.reduced.source_files = table.source_files;
    for (size_t i : kept_indices) result.reduced.columns.push_back(table.columns[i]);
    result.reduced.rows.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        std::vector<std::string> cells;
        cells.reserve(kept_indices.size());
        for (size_t i : kept_indices) cells.push_back(row[i]);
        result.reduced.rows.push_back(std::move(cells));
    }
    return result;
}

Scaler fit_scaler(const NumericMatrix& train_matrix) {
    if (train_matrix.n_rows == 0) throw Error("fit_scaler: no training rows");
    Scaler s;
    s.fitted_on = train_matrix.n_rows;
    s.min.assign(train_matrix.n_cols, 0.0);
    s.max.assign(train_matrix.n_cols, 0.0);
    for (size_t c = 0; c < train_matrix.n_cols; ++c) {
        double lo = train_matrix.at(0, c);
        double hi = lo;
        for (size_t r = 0; r < train_matrix.n_rows; ++r) {
            double v = train_matrix.at(r, c);
            if (!std::isfinite(v))
                throw Error("fit_scaler: non-finite value in feature column " +
                            std::to_string(c) + " (cleaning contract violated)");
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        s.min[c] = lo;
        s.max[c] = hi;
    }
    return s;
}

void apply_scaler(const Scaler& scaler, NumericMatrix& matrix) {
    if (matrix.n_cols != scaler.min.size())
        throw Error("apply_scaler: matrix has " + std::to_string(matrix.n_cols) +
                    " columns, scaler was fitted on " + std::to_string(scaler.min.size()));
    for (size_t c = 0; c < matrix.n_cols; ++c) {
        double lo = scaler.min[c];
        double denom = scaler.max[c] - lo;
        for (size_t r = 0; r < matrix.n_rows; ++r) {
            double& x = matrix.at(r, c);
            double y = denom > 0.0 ? (x - lo) / denom : 0.0;
            x = std::clamp(y, 0.0, 1.0);
        }
    }
}

std::vector<std::string> fit_categories(const std::vector<std::string>& values) {
    std::vector<std::string> cats;
    std::unordered_set<std::string> seen;
    for (const auto& v : values) {
        std::string t = trim(v);
        if (seen.insert(t).second) cats.push_back(std::move(t));
    }
    std::sort(cats.begin(), cats.end(), numeric_less);
    return cats;
}

OneHotBlock one_hot(const std::vector<std::string>& values,
                    const std::vector<std::string>& categories, EncodeMode mode) {
    std::unordered_map<std::string, size_t> index;
    for (size_t i = 0; i < categories.size(); ++i) index.emplace(categories[i], i);

    OneHotBlock block;
    block.n_rows = values.size();
    block.n_cols = categories.size();
    block.data.assign(block.n_rows * block.n_cols, 0.0f);
    for (size_t r = 0; r < values.size(); ++r) {
        std::string t = trim(values[r]);
        auto it = index.find(t);
        if (it == index.end()) {
            if (mode == EncodeMode::Train)
                throw Error("one_hot: unseen category \"" + t +
                            "\" while encoding training rows");
            ++block.unseen_count;  // row stays all-zero
            continue;
        }
        block.data[r * block.n_cols + it->second] = 1.0f;
    }
    return block;
}

DatasetSplit split(size_t n, const LabelVector& labels, uint64_t seed) {
    if (n < 10) throw Error("split: need at least 10 rows, got " + std::to_string(n));
    if (labels.values.size() != n)
        throw Error("split: labels length " + std::to_string(labels.values.size()) +
                    " does not match row count " + std::to_string(n));

    std::vector<size_t> class_members[2];
    for (size_t i = 0; i < n; ++i) class_members[labels.values[i] ? 1 : 0].push_back(i);
    for (int c = 0; c < 2; ++c)
        if (class_members[c].size() < 3)
            throw Error("split: class " + std::to_string(c) + " has only " +
                        std::to_string(class_members[c].size()) + " members (need >= 3)");

    const size_t part_sizes[3] = {static_cast<size_t>(std::floor(0.70 * double(n))),
                                  static_cast<size_t>(std::floor(0.15 * double(n))), 0};
    const size_t n_train = part_sizes[0];
    const size_t n_val = part_sizes[1];
    const size_t n_test = n - n_train - n_val;
    const size_t sizes[3] = {n_train, n_val, n_test};

    // Controlled rounding of the 2x3 allocation matrix: pick class-0 seat
    // counts for train/val among floor/ceil of exact proportionality so that
    // every cell (both classes, all parts) deviates < 1 from exact and stays
    // non-negative. Such a choice always exists; ties resolve to the smallest
    // total deviation, then floor-first.
    const double c0 = static_cast<double>(class_members[0].size());
    double exact0[3];
    for (int p = 0; p < 3; ++p) exact0[p] = c0 * double(sizes[p]) / double(n);

    long best_t = -1, best_v = -1;
    double best_dev = std::numeric_limits<double>::infinity();
    for (int dt = 0; dt < 2; ++dt) {
        for (int dv = 0; dv < 2; ++dv) {
            long t = static_cast<long>(std::floor(exact0[0])) + dt;
            long v = static_cast<long>(std::floor(exact0[1])) + dv;
            long te = static_cast<long>(class_members[0].size()) - t - v;
            long cells0[3] = {t, v, te};
            bool ok = true;
            double dev = 0.0;
            for (int p = 0; p < 3 && ok; ++p) {
                double d = std::abs(double(cells0[p]) - exact0[p]);
                long other = static_cast<long>(sizes[p]) - cells0[p];
                if (cells0[p] < 0 || other < 0 || d >= 1.0) ok = false;
                dev += 2.0 * d;  // class-1 deviations mirror class 0
            }
            if (ok && dev < best_dev - 1e-12) {
                best_dev = dev;
                best_t = t;
                best_v = v;
            }
        }
    }
    if (best_t < 0) throw Error("split: no valid stratified allocation");  // unreachable

    size_t seats[2][2];  // [class][train/val]; test is the per-class remainder
    seats[0][0] = static_cast<size_t>(best_t);
    seats[0][1] = static_cast<size_t>(best_v);
    seats[1][0] = n_train - seats[0][0];
    seats[1][1] = n_val - seats[0][1];

    DatasetSplit out;
    out.seed = seed;
    for (int c = 0; c < 2; ++c) {
        auto& members = class_members[c];
        Rng rng(derive_seed(seed, "split-class", static_cast<uint64_t>(c)));
        rng.shuffle(members);
        size_t t_end = seats[c][0];
        size_t v_end = t_end + seats[c][1];
        out.train_idx.insert(out.train_idx.end(), members.begin(), members.begin() + t_end);
        out.val_idx.insert(out.val_idx.end(), members.begin() + t_end, members.begin() + v_end);
        out.test_idx.insert(out.test_idx.end(), members.begin() + v_end, members.end());
    }
    std::sort(out.train_idx.begin(), out.train_idx.end());
    std::sort(out.val_idx.begin(), out.val_idx.end());
    std::sort(out.test_idx.begin(), out.test_idx.end());
    return out;
}

// ---- pipeline assembly -----------------------------------------------------

namespace {

// Scaling shared verbatim by preprocessing and inference-time transforms.
double scale_value(double x, double lo, double hi) {
    double denom = hi - lo;
    double y = denom > 0.0 ? (x - lo) / denom : 0.0;
    return std::clamp(y, 0.0, 1.0);
}

struct CategoryLookup {
    std::vector<std::unordered_map<std::string, size_t>> by_column;
    std::vector<size_t> offsets;  // column offset of each one-hot block
    size_t total_onehot = 0;

    explicit CategoryLookup(const PreprocessArtifact& a) {
        size_t offset = a.schema.numeric_columns.size();
        for (const auto& col : a.schema.categorical_columns) {
            const auto& cats = a.schema.categories.at(col);
            std::unordered_map<std::string, size_t> idx;
            for (size_t i = 0; i < cats.size(); ++i) idx.emplace(cats[i], i);
            by_column.push_back(std::move(idx));
            offsets.push_back(offset);
            offset += cats.size();
            total_onehot += cats.size();
        }
    }
};

// One raw record -> model input vector. `numeric` and `categorical` hold the
// raw cell strings in schema order.
std::vector<float> transform_cells(const PreprocessArtifact& a, const CategoryLookup& lookup,
                                   const std::vector<const std::string*>& numeric,
                                   const std::vector<const std::string*>& categorical,
                                   TransformStats& stats, const std::string& context) {
    std::vector<float> out(a.feature_names.size(), 0.0f);
    for (size_t c = 0; c < numeric.size(); ++c) {
        ParsedNumber p = classify_number(*numeric[c]);
        if (p.cls != NumberClass::Finite)
            throw Error(context + ": column \"" + a.schema.numeric_columns[c] +
                        "\" is not a finite number: \"" + *numeric[c] + "\"");
        out[c] = static_cast<float>(scale_value(p.value, a.scaler.min[c], a.scaler.max[c]));
    }
    for (size_t k = 0; k < categorical.size(); ++k) {
        std::string t = trim(*categorical[k]);
        auto it = lookup.by_column[k].find(t);
        if (it == lookup.by_column[k].end()) {
            ++stats.unseen_categories;  // all-zero block
            continue;
        }
        out[lookup.offsets[k] + it->second] = 1.0f;
    }
    return out;
}

}  // namespace

PreprocessResult run_preprocess(FlowTable raw, const std::string& label_column, uint64_t seed) {
    CleanResult cleaned = clean(std::move(raw));
    LabelVector labels = binarize_labels(cleaned.table, label_column);
    SelectResult selected = select_features(cleaned.table, label_column);

    const size_t n = cleaned.table.rows.size();
    DatasetSplit data_split = split(n, labels, derive_seed(seed, "split"));

    // Numeric staging matrix for the whole table.
    const auto& numeric_cols = selected.schema.numeric_columns;
    std::vector<size_t> numeric_idx;
    for (const auto& name : numeric_cols) numeric_idx.push_back(selected.reduced.column_index(name));

    NumericMatrix staged;
    staged.n_rows = n;
    staged.n_cols = numeric_cols.size();
    staged.data.resize(n * staged.n_cols);
    for (size_t r = 0; r < n; ++r) {
        const auto& row = selected.reduced.rows[r];
        for (size_t c = 0; c < numeric_idx.size(); ++c) {
            ParsedNumber p = classify_number(row[numeric_idx[c]]);
            if (p.cls != NumberClass::Finite)
                throw Error("preprocess: row " + std::to_string(r) + " column \"" +
                            numeric_cols[c] + "\" is not a finite number: \"" +
                            row[numeric_idx[c]] + "\"");
            staged.at(r, c) = p.value;
        }
    }

    NumericMatrix train_rows;
    train_rows.n_rows = data_split.train_idx.size();
    train_rows.n_cols = staged.n_cols;
    train_rows.data.reserve(train_rows.n_rows * train_rows.n_cols);
    for (size_t r : data_split.train_idx)
        train_rows.data.insert(train_rows.data.end(), staged.data.begin() + r * staged.n_cols,
                               staged.data.begin() + (r + 1) * staged.n_cols);

    Scaler scaler = fit_scaler(train_rows);
    apply_scaler(scaler, staged);

    // One-hot blocks, categories fitted on training rows only.
    std::vector<OneHotBlock> blocks;
    std::unordered_set<size_t> train_set(data_split.train_idx.begin(),
                                         data_split.train_idx.end());
    size_t unseen = 0;
    for (const auto& col : selected.schema.categorical_columns) {
        size_t idx = selected.reduced.column_index(col);
        std::vector<std::string> train_values;
        std::vector<std::string> all_values;
        all_values.reserve(n);
        for (size_t r = 0; r < n; ++r) {
            all_values.push_back(selected.reduced.rows[r][idx]);
            if (train_set.count(r)) train_values.push_back(selected.reduced.rows[r][idx]);
        }
        selected.schema.categories[col] = fit_categories(train_values);
        OneHotBlock block = one_hot(all_values, selected.schema.categories[col],
                                    EncodeMode::Inference);
        unseen += block.unseen_count;
        blocks.push_back(std::move(block));
    }

    // Assemble: scaled numerics, then one-hot blocks in schema order.
    FeatureMatrix matrix;
    matrix.feature_names = numeric_cols;
    for (size_t k = 0; k < selected.schema.categorical_columns.size(); ++k) {
        const auto& col = selected.schema.categorical_columns[k];
        for (const auto& cat : selected.schema.categories.at(col))
            matrix.feature_names.push_back(col + "=" + cat);
    }
    matrix.n_rows = n;
    matrix.n_cols = matrix.feature_names.size();
    matrix.labels = std::move(labels);
    matrix.data.assign(matrix.n_rows * matrix.n_cols, 0.0f);
    for (size_t r = 0; r < n; ++r) {
        float* dst = matrix.data.data() + r * matrix.n_cols;
        for (size_t c = 0; c < staged.n_cols; ++c) dst[c] = static_cast<float>(staged.at(r, c));
        size_t offset = staged.n_cols;
        for (const auto& block : blocks) {
            const float* src = block.data.data() + r * block.n_cols;
            std::copy(src, src + block.n_cols, dst + offset);
            offset += block.n_cols;
        }
    }

    PreprocessResult result;
    result.artifact.label_column = label_column;
    result.artifact.seed = seed;
    result.artifact.clean_report = cleaned.report;
    result.artifact.schema = std::move(selected.schema);
    result.artifact.scaler = std::move(scaler);
    result.artifact.data_split = std::move(data_split);
    result.artifact.feature_names = matrix.feature_names;
    result.artifact.n_rows = matrix.n_rows;
    result.artifact.n_cols = matrix.n_cols;
    result.unseen_categories = unseen;
    result.matrix = std::move(matrix);
    return result;
}

FeatureMatrix transform_table(const PreprocessArtifact& artifact, const FlowTable& input,
                              TransformStats& stats) {
    std::vector<std::string> missing;
    std::vector<size_t> numeric_idx, categorical_idx;
    for (const auto& name : artifact.schema.numeric_columns) {
        if (!input.has_column(name)) missing.push_back(name);
        else numeric_idx.push_back(input.column_index(name));
    }
    for (const auto& name : artifact.schema.categorical_columns) {
        if (!input.has_column(name)) missing.push_back(name);
        else categorical_idx.push_back(input.column_index(name));
    }
    if (!missing.empty()) {
        std::string msg = "input is missing required columns:";
        for (const auto& m : missing) msg += " \"" + m + "\"";
        throw Error(msg);
    }

    CategoryLookup lookup(artifact);
    FeatureMatrix out;
    out.feature_names = artifact.feature_names;
    out.n_rows = input.rows.size();
    out.n_cols = artifact.feature_names.size();
    out.data.reserve(out.n_rows * out.n_cols);
    std::vector<const std::string*> numeric(numeric_idx.size());
    std::vector<const std::string*> categorical(categorical_idx.size());
    for (size_t r = 0; r < input.rows.size(); ++r) {
        const auto& row = input.rows[r];
        for (size_t c = 0; c < numeric_idx.size(); ++c) numeric[c] = &row[numeric_idx[c]];
        for (size_t c = 0; c < categorical_idx.size(); ++c)
            categorical[c] = &row[categorical_idx[c]];
        std::vector<float> v = transform_cells(artifact, lookup, numeric, categorical, stats,
                                               "row " + std::to_string(r));
        out.data.insert(out.data.end(), v.begin(), v.end());
    }
    return out;
}

std::vector<float> transform_fields(const PreprocessArtifact& artifact,
                                    const std::map<std::string, std::string>& fields,
                                    TransformStats& stats) {
    std::vector<std::string> missing;
    std::vector<const std::string*> numeric, categorical;
    for (const auto& name : artifact.schema.numeric_columns) {
        auto it = fields.find(name);
        if (it == fields.end()) missing.push_back(name);
        else numeric.push_back(&it->second);
    }
    for (const auto& name : artifact.schema.categorical_columns) {
        auto it = fields.find(name);
        if (it == fields.end()) missing.push_back(name);
        else categorical.push_back(&it->second);
    }
    if (!missing.empty()) {
        std::string msg = "request is missing schema fields:";
        for (const auto& m : missing) msg += " \"" + m + "\"";
        throw Error(msg);
    }
    CategoryLookup lookup(artifact);
    return transform_cells(artifact, lookup, numeric, categorical, stats, "request");
}

// ---- persistence -----------------------------------------------------------

void save_artifact(const PreprocessArtifact& a, const std::string& path) {
    ordered_json j;
    j["format_version"] = 1;
    j["label_column"] = a.label_column;
    j["seed"] = a.seed;
    j["clean_report"] = {{"rows_in", a.clean_report.rows_in},
                         {"rows_dropped_missing", a.clean_report.rows_dropped_missing},
                         {"rows_dropped_nonfinite", a.clean_report.rows_dropped_nonfinite},
                         {"rows_dropped_duplicate", a.clean_report.rows_dropped_duplicate},
                         {"rows_out", a.clean_report.rows_out}};
    ordered_json schema;
    schema["numeric_columns"] = a.schema.numeric_columns;
    schema["categorical_columns"] = a.schema.categorical_columns;
    ordered_json dropped = ordered_json::array();
    for (const auto& d : a.schema.dropped_columns)
        dropped.push_back({{"name", d.name}, {"reason", d.reason}});
    schema["dropped_columns"] = dropped;
    ordered_json cats;
    for (const auto& col : a.schema.categorical_columns)
        cats[col] = a.schema.categories.at(col);
    schema["categories"] = cats;
    j["schema"] = schema;
    j["scaler"] = {{"fitted_on", a.scaler.fitted_on}, {"min", a.scaler.min},
                   {"max", a.scaler.max}};
    j["split"] = {{"seed", a.data_split.seed},
                  {"ratios", {0.70, 0.15, 0.15}},
                  {"train", a.data_split.train_idx},
                  {"val", a.data_split.val_idx},
                  {"test", a.data_split.test_idx}};
    j["feature_names"] = a.feature_names;
    j["matrix"] = {{"rows", a.n_rows}, {"cols", a.n_cols}};

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << "\n";
}

PreprocessArtifact load_artifact(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open artifact: " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error("malformed artifact JSON " + path + ": " + e.what());
    }
    if (j.value("format_version", -1) != 1)
        throw Error("unknown artifact format_version in " + path);

    PreprocessArtifact a;
    a.label_column = j.at("label_column").get<std::string>();
    a.seed = j.at("seed").get<uint64_t>();
    const auto& cr = j.at("clean_report");
    a.clean_report.rows_in = cr.at("rows_in").get<size_t>();
    a.clean_report.rows_dropped_missing = cr.at("rows_dropped_missing").get<size_t>();
    a.clean_report.rows_dropped_nonfinite = cr.at("rows_dropped_nonfinite").get<size_t>();
    a.clean_report.rows_dropped_duplicate = cr.at("rows_dropped_duplicate").get<size_t>();
    a.clean_report.rows_out = cr.at("rows_out").get<size_t>();
    const auto& schema = j.at("schema");
    a.schema.numeric_columns = schema.at("numeric_columns").get<std::vector<std::string>>();
    a.schema.categorical_columns =
        schema.at("categorical_columns").get<std::vector<std::string>>();
    for (const auto& d : schema.at("dropped_columns"))
        a.schema.dropped_columns.push_back(
            {d.at("name").get<std::string>(), d.at("reason").get<std::string>()});
    for (const auto& col : a.schema.categorical_columns)
        a.schema.categories[col] =
            schema.at("categories").at(col).get<std::vector<std::string>>();
    const auto& scaler = j.at("scaler");
    a.scaler.fitted_on = scaler.at("fitted_on").get<size_t>();
    a.scaler.min = scaler.at("min").get<std::vector<double>>();
    a.scaler.max = scaler.at("max").get<std::vector<double>>();
    const auto& sp = j.at("split");
    a.data_split.seed = sp.at("seed").get<uint64_t>();
    a.data_split.train_idx = sp.at("train").get<std::vector<size_t>>();
    a.data_split.val_idx = sp.at("val").get<std::vector<size_t>>();
    a.data_split.test_idx = sp.at("test").get<std::vector<size_t>>();
    a.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    a.n_rows = j.at("matrix").at("rows").get<size_t>();
    a.n_cols = j.at("matrix").at("cols").get<size_t>();
    return a;
}

void save_matrix_bin(const FeatureMatrix& m, const std::string& features_path,
                     const std::string& labels_path) {
    std::ofstream fx(features_path, std::ios::binary);
    if (!fx) throw Error("cannot write " + features_path);
    fx.write(reinterpret_cast<const char*>(m.data.data()),
             static_cast<std::streamsize>(m.data.size() * sizeof(float)));
    std::ofstream fy(labels_path, std::ios::binary);
    if (!fy) throw Error("cannot write " + labels_path);
    fy.write(reinterpret_cast<const char*>(m.labels.values.data()),
             static_cast<std::streamsize>(m.labels.values.size()));
}

FeatureMatrix load_matrix_bin(const PreprocessArtifact& artifact,
                              const std::string& features_path,
                              const std::string& labels_path) {
    FeatureMatrix m;
    m.n_rows = artifact.n_rows;
    m.n_cols = artifact.n_cols;
    m.feature_names = artifact.feature_names;
    m.data.resize(m.n_rows * m.n_cols);
    std::ifstream fx(features_path, std::ios::binary);
    if (!fx) throw Error("cannot open " + features_path);
    fx.read(reinterpret_cast<char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(float)));
    if (static_cast<size_t>(fx.gcount()) != m.data.size() * sizeof(float))
        throw Error("truncated feature matrix: " + features_path);
    m.labels.values.resize(m.n_rows);
    std::ifstream fy(labels_path, std::ios::binary);
    if (!fy) throw Error("cannot open " + labels_path);
    fy.read(reinterpret_cast<char*>(m.labels.values.data()),
            static_cast<std::streamsize>(m.n_rows));
    if (static_cast<size_t>(fy.gcount()) != m.n_rows)
        throw Error("truncated label file: " + labels_path);
    return m;
}

}  // namespace flowids
