#include "flowids/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "flowids/util.hpp"

namespace flowids {

namespace {

void check_inputs(const std::vector<uint8_t>& labels, const std::vector<double>& scores) {
    if (labels.empty()) throw Error("metrics: empty input");
    if (labels.size() != scores.size())
        throw Error("metrics: " + std::to_string(labels.size()) + " labels vs " +
                    std::to_string(scores.size()) + " scores");
}

// Published reference results this engine is measured against. The counts
// and the headline metrics quoted below do not agree with each other under
// any standard definition; summary_metrics surfaces that whenever the
// reference counts are evaluated.
constexpr size_t kReferenceTp = 679222;
constexpr size_t kReferenceTn = 165703;
constexpr size_t kReferenceFp = 2174;
constexpr size_t kReferenceFn = 1264;

const char* kReferenceDiscrepancyNote =
    "Computed from the reference confusion counts (tp=679222, tn=165703, fp=2174, fn=1264): "
    "accuracy 0.9959, precision 0.9968, recall 0.9981, FAR 0.0130 (fp/(fp+tn)). These do not "
    "match the separately reported headline metrics (accuracy 99.52%, precision 98.70%, recall "
    "99.24%, F1 98.97%) nor the reported 0.14% false alarm rate; no standard FAR definition "
    "reproduces 0.14% from these counts (fn/total ~ 0.149% is the nearest). This report uses "
    "the formula values.";

}  // namespace

ConfusionMatrix confusion(const std::vector<uint8_t>& labels, const std::vector<double>& scores,
                          double threshold) {
    check_inputs(labels, scores);
    ConfusionMatrix cm;
    cm.threshold = threshold;
    for (size_t i = 0; i < labels.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        const bool actual = labels[i] != 0;
        if (predicted && actual) ++cm.tp;
        else if (predicted && !actual) ++cm.fp;
        else if (!predicted && actual) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

MetricsReport summary_metrics(const ConfusionMatrix& cm) {
    MetricsReport r;
    r.cm = cm;
    const double tp = static_cast<double>(cm.tp), tn = static_cast<double>(cm.tn);
    const double fp = static_cast<double>(cm.fp), fn = static_cast<double>(cm.fn);

    if (cm.total() > 0) r.accuracy = (tp + tn) / static_cast<double>(cm.total());
    if (cm.tp + cm.fp > 0) r.precision = tp / (tp + fp);
    if (cm.tp + cm.fn > 0) r.recall = tp / (tp + fn);
    if (r.precision && r.recall && (*r.precision + *r.recall) > 0.0)
        r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
    if (cm.fp + cm.tn > 0) r.false_alarm_rate = fp / (fp + tn);

    if (cm.tp == kReferenceTp && cm.tn == kReferenceTn && cm.fp == kReferenceFp &&
        cm.fn == kReferenceFn)
        r.notes.push_back(kReferenceDiscrepancyNote);
    return r;
}

RocResult roc_curve(const std::vector<uint8_t>& labels, const std::vector<double>& scores) {
    check_inputs(labels, scores);
    size_t positives = 0;
    for (uint8_t y : labels) positives += y != 0;
    const size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0)
        throw Error("roc_curve: both classes must be present");

    std::vector<size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&scores](size_t a, size_t b) { return scores[a] > scores[b]; });

    RocResult r;
    r.points.kind = CurveKind::Roc;
    r.points.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});

    size_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {  // ties grouped
            if (labels[order[i]]) ++tp;
            else ++fp;
            ++i;
        }
        r.points.points.push_back({s, static_cast<double>(fp) / static_cast<double>(negatives),
                                   static_cast<double>(tp) / static_cast<double>(positives)});
    }

    double auc = 0.0;
    for (size_t k = 1; k < r.points.points.size(); ++k) {
        const auto& prev = r.points.points[k - 1];
        const auto& cur = r.points.points[k];
        auc += (cur.x - prev.x) * (cur.y + prev.y) / 2.0;
    }
    r.auc = auc;
    return r;
}

PrResult pr_curve(const std::vector<uint8_t>& labels, const std::vector<double>& scores) {
    check_inputs(labels, scores);
    size_t positives = 0;
    for (uint8_t y : labels) positives += y != 0;
    if (positives == 0) throw Error("pr_curve: no positive samples");

    std::vector<size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&scores](size_t a, size_t b) { return scores[a] > scores[b]; });

    PrResult r;
    r.points.kind = CurveKind::Pr;
    size_t tp = 0, fp = 0;
    double prev_recall = 0.0;
    double ap = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]]) ++tp;
            else ++fp;
            ++i;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        r.points.points.push_back({s, recall, precision});
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    r.average_precision = ap;
    return r;
}

void export_curves(const CurvePoints& points, const std::string& path) {
    if (points.points.empty()) throw Error("export_curves: no points to export");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write curve file: " + path);
    out << "threshold,x,y\n";
    for (const auto& p : points.points)
        out << format_g9(p.threshold) << "," << format_g9(p.x) << "," << format_g9(p.y) << "\n";
    if (!out) throw Error("write failed: " + path);
}

nlohmann::ordered_json report_to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    auto put = [&j](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
        else j[key] = nullptr;  // undefined metric, never silently 0
    };
    put("accuracy", r.accuracy);
    put("precision", r.precision);
    put("recall", r.recall);
    put("f1", r.f1);
    put("false_alarm_rate", r.false_alarm_rate);
    put("auc", r.auc);
    put("average_precision", r.average_precision);
    j["confusion"] = {{"tp", r.cm.tp},
                      {"tn", r.cm.tn},
                      {"fp", r.cm.fp},
                      {"fn", r.cm.fn},
                      {"threshold", r.cm.threshold},
                      {"total", r.cm.total()}};
    j["notes"] = r.notes;
    return j;
}

}  // namespace flowids
