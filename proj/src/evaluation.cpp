#include "yunet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "yunet/error.hpp"
#include "yunet/training.hpp"

namespace yunet {

using json = nlohmann::json;

SegmentationReport evaluate_segmentation(const std::vector<MaskPair>& pairs) {
    if (pairs.empty()) throw DataError("evaluation dataset is empty");
    SegmentationReport report;
    for (const auto& p : pairs) {
        SegmentationRow row;
        row.id = p.id;
        row.counts = confusion_counts(p.pred, p.gt);
        row.metrics = segmentation_metrics(row.counts);
        report.total += row.counts;
        report.rows.push_back(std::move(row));
    }
    report.metrics = segmentation_metrics(report.total);
    return report;
}

SkylineReport evaluate_skyline(const std::vector<MaskPair>& pairs, SkylineMethod method, const EdgeParams& params) {
    if (pairs.empty()) throw DataError("evaluation dataset is empty");
    SkylineReport report;
    report.method = method;
    std::vector<PadResult> results;
    for (const auto& p : pairs) {
        const SkylineVector pred = extract_skyline(p.pred, method, params);
        const SkylineVector gt = extract_skyline(p.gt, method, params);
        try {
            PadResult r = pad(pred, gt);
            results.push_back(r);
            report.rows.push_back({p.id, r});
        } catch (const NoOverlapError&) {
            report.excluded.push_back(p.id);
        }
    }
    if (!results.empty()) report.aggregate = aggregate_pad(results);
    return report;
}

std::vector<MaskPair> predict_pairs(const Network& net, const Dataset& data, double threshold) {
    std::vector<MaskPair> pairs;
    pairs.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Sample s = data.get(i, false, 0);
        MaskPair p;
        p.id = s.id.empty() ? std::to_string(i) : s.id;
        p.pred = predict_mask(net, s.image, threshold, &s.letterbox);
        p.gt = crop_to_content(tensor_to_mask(s.mask), s.letterbox);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

SegmentationReport evaluate_segmentation(const Network& net, const Dataset& data, double threshold) {
    return evaluate_segmentation(predict_pairs(net, data, threshold));
}

SkylineReport evaluate_skyline(const Network& net, const Dataset& data, SkylineMethod method, double threshold,
                               const EdgeParams& params) {
    return evaluate_skyline(predict_pairs(net, data, threshold), method, params);
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string num(const std::optional<double>& v) {
    return v ? num(*v) : std::string();
}

json opt_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

std::string pct(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", *v * 100.0);
    return buf;
}

std::string fixed(double v, int digits) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string pad_right(std::string s, std::size_t width) {
    // Column widths count code points; the Greek headers are two bytes each.
    std::size_t len = 0;
    for (unsigned char c : s) len += (c & 0xC0) != 0x80;
    if (len < width) s.append(width - len, ' ');
    return s;
}

} // namespace

std::string segmentation_csv(const SegmentationReport& report) {
    std::string out = "image,tp,fp,tn,fn,accuracy,precision,recall,dice,iou,mcr\n";
    for (const auto& r : report.rows) {
        const auto& m = r.metrics;
        out += r.id + "," + std::to_string(r.counts.tp) + "," + std::to_string(r.counts.fp) + "," +
               std::to_string(r.counts.tn) + "," + std::to_string(r.counts.fn) + "," + num(m.accuracy) + "," +
               num(m.precision) + "," + num(m.recall) + "," + num(m.dice) + "," + num(m.iou) + "," + num(m.mcr) +
               "\n";
    }
    return out;
}

std::string skyline_csv(const SkylineReport& report) {
    std::string out = "image,pad,evaluated_columns,skipped_columns\n";
    for (const auto& r : report.rows) {
        out += r.id + "," + num(r.pad.e) + "," + std::to_string(r.pad.evaluated_columns) + "," +
               std::to_string(r.pad.skipped_columns) + "\n";
    }
    return out;
}

std::string summary_json(const SegmentationReport* seg, const SkylineReport* sky, const std::string& dataset) {
    json j;
    j["dataset"] = dataset;
    if (seg) {
        const auto& m = seg->metrics;
        j["segmentation"] = {{"accuracy", m.accuracy},
                             {"precision", opt_json(m.precision)},
                             {"recall", opt_json(m.recall)},
                             {"dice", opt_json(m.dice)},
                             {"iou", opt_json(m.iou)},
                             {"mcr", m.mcr},
                             {"images", seg->rows.size()},
                             {"averaging", "micro"},
                             {"counts", {{"tp", seg->total.tp}, {"fp", seg->total.fp}, {"tn", seg->total.tn},
                                         {"fn", seg->total.fn}}}};
    }
    if (sky) {
        json s;
        s["method"] = std::string(to_string(sky->method));
        if (sky->aggregate) {
            s["mu"] = sky->aggregate->mu;
            s["sigma"] = sky->aggregate->sigma;
            s["min"] = sky->aggregate->min;
            s["max"] = sky->aggregate->max;
        } else {
            s["mu"] = s["sigma"] = s["min"] = s["max"] = nullptr;
        }
        s["images"] = sky->rows.size();
        s["excluded"] = sky->excluded.size();
        s["excluded_images"] = sky->excluded;
        j["skyline"] = s;
    }
    return j.dump(2);
}

std::string segmentation_table(const SegmentationReport& report, const std::string& method_name) {
    const auto& m = report.metrics;
    const std::size_t w0 = std::max<std::size_t>(12, method_name.size() + 2);
    std::string out = pad_right("Method", w0) + pad_right("Accuracy(%)", 14) + pad_right("Precision(%)", 14) +
                      pad_right("Recall(%)", 12) + pad_right("Dice-Score(%)", 15) + "IoU\n";
    out += pad_right(method_name, w0) + pad_right(pct(m.accuracy), 14) + pad_right(pct(m.precision), 14) +
           pad_right(pct(m.recall), 12) + pad_right(pct(m.dice), 15) + (m.iou ? fixed(*m.iou, 4) : "n/a") + "\n";
    return out;
}

std::string skyline_table(const SkylineReport& report, const std::string& method_name) {
    const std::size_t w0 = std::max<std::size_t>(12, method_name.size() + 2);
    std::string out = pad_right("Method", w0) + pad_right("μ", 8) + pad_right("σ", 8) + pad_right("Min", 8) + "Max\n";
    out += pad_right(method_name, w0);
    if (report.aggregate) {
        const auto& a = *report.aggregate;
        out += pad_right(fixed(a.mu, 2), 8) + pad_right(fixed(a.sigma, 2), 8) + pad_right(fixed(a.min, 2), 8) +
               fixed(a.max, 2) + "\n";
    } else {
        out += "n/a\n";
    }
    if (!report.excluded.empty()) {
        out += "(" + std::to_string(report.excluded.size()) + " image(s) excluded: no mutually defined columns)\n";
    }
    return out;
}

void write_histogram_png(const std::vector<double>& values, const std::string& title,
                         const std::filesystem::path& path) {
    constexpr int kWidth = 480;
    constexpr int kHeight = 320;
    constexpr int kBins = 20;
    constexpr int kMargin = 40;
    cv::Mat canvas(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));
    double lo = 0.0;
    double hi = 1.0;
    if (!values.empty()) {
        lo = *std::min_element(values.begin(), values.end());
        hi = *std::max_element(values.begin(), values.end());
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
    std::vector<int> bins(kBins, 0);
    for (double v : values) {
        const int b = std::clamp(static_cast<int>((v - lo) / (hi - lo) * kBins), 0, kBins - 1);
        ++bins[b];
    }
    const int peak = std::max(1, *std::max_element(bins.begin(), bins.end()));
    const double bar_w = static_cast<double>(kWidth - 2 * kMargin) / kBins;
    for (int b = 0; b < kBins; ++b) {
        const int bar_h = static_cast<int>(std::lround(static_cast<double>(bins[b]) / peak * (kHeight - 2 * kMargin)));
        const cv::Point p0(kMargin + static_cast<int>(b * bar_w), kHeight - kMargin - bar_h);
        const cv::Point p1(kMargin + static_cast<int>((b + 1) * bar_w) - 1, kHeight - kMargin);
        cv::rectangle(canvas, p0, p1, cv::Scalar(180, 110, 40), cv::FILLED);
    }
    cv::line(canvas, {kMargin, kHeight - kMargin}, {kWidth - kMargin, kHeight - kMargin}, cv::Scalar(0, 0, 0));
    cv::putText(canvas, title, {kMargin, 24}, cv::FONT_HERSHEY_SIMPLEX, 0.5, cv::Scalar(0, 0, 0));
    cv::putText(canvas, fixed(lo, 3), {kMargin, kHeight - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.4, cv::Scalar(0, 0, 0));
    cv::putText(canvas, fixed(hi, 3), {kWidth - kMargin - 40, kHeight - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.4,
                cv::Scalar(0, 0, 0));
    cv::putText(canvas, "n=" + std::to_string(values.size()), {kWidth - kMargin - 60, 24}, cv::FONT_HERSHEY_SIMPLEX,
                0.45, cv::Scalar(0, 0, 0));
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), canvas)) throw IoError("cannot write plot " + path.string());
}

} // namespace yunet
