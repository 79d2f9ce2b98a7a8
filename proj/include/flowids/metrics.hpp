#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace flowids {

// Positive class = attack. Prediction rule: score >= threshold.
struct ConfusionMatrix {
    size_t tp = 0;
    size_t tn = 0;
    size_t fp = 0;
    size_t fn = 0;
    double threshold = 0.5;

    size_t total() const { return tp + tn + fp + fn; }
};

// Scalar metrics; a degenerate denominator leaves the metric unset rather
// than silently zero.
struct MetricsReport {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> false_alarm_rate;
    std::optional<double> auc;
    std::optional<double> average_precision;
    ConfusionMatrix cm;
    std::vector<std::string> notes;
};

struct CurvePoint {
    double threshold = 0.0;
    double x = 0.0;
    double y = 0.0;
};

enum class CurveKind { Roc, Pr };

struct CurvePoints {
    std::vector<CurvePoint> points;  // ordered by descending threshold
    CurveKind kind = CurveKind::Roc;
};

ConfusionMatrix confusion(const std::vector<uint8_t>& labels, const std::vector<double>& scores,
                          double threshold);

MetricsReport summary_metrics(const ConfusionMatrix& cm);

struct RocResult {
    CurvePoints points;  // (fpr, tpr) per distinct-score threshold, (0,0) to (1,1)
    double auc = 0.0;    // trapezoidal
};
RocResult roc_curve(const std::vector<uint8_t>& labels, const std::vector<double>& scores);

struct PrResult {
    CurvePoints points;              // (recall, precision) per distinct-score threshold
    double average_precision = 0.0;  // step sum over descending scores
};
PrResult pr_curve(const std::vector<uint8_t>& labels, const std::vector<double>& scores);

// CSV `threshold,x,y`, 9 significant digits, descending threshold.
void export_curves(const CurvePoints& points, const std::string& path);

nlohmann::ordered_json report_to_json(const MetricsReport& report);

}  // namespace flowids
