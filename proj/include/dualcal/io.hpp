#ifndef DUALCAL_IO_HPP
#define DUALCAL_IO_HPP

// Logits files, JSON reports and the reliability-diagram SVG.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "dualcal/batch.hpp"
#include "dualcal/error.hpp"
#include "dualcal/metrics.hpp"
#include "dualcal/posthoc.hpp"
#include "dualcal/theory.hpp"
#include "dualcal/trainer.hpp"

namespace dualcal::io {

using Json = nlohmann::ordered_json;

/// 17 significant digits in scientific notation; reads back bit-exact.
inline std::string format_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 16);
    return {buf, res.ptr};
}

inline std::string format_fixed(double v, int decimals = 6) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    return {buf, res.ptr};
}

// --- logits files --------------------------------------------------------

inline void write_logits(std::ostream& out, const LabeledBatch& batch) {
    batch.validate();
    out << "label";
    for (std::size_t k = 0; k < batch.num_classes; ++k) out << ",logit_" << k;
    out << '\n';
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out << batch.labels[i];
        for (double z : batch.row(i)) out << ',' << format_real(z);
        out << '\n';
    }
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

}  // namespace detail

/// Parses "label,logit_0,...,logit_{K-1}" files. Errors carry the 1-based line number.
inline LabeledBatch read_logits(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DataError("empty logits file", 1);
    ++line_no;
    const auto header = detail::split_fields(detail::trim(line));
    if (header.size() < 3 || detail::trim(header[0]) != "label")
        throw DataError("header must be label,logit_0,...,logit_{K-1} with K >= 2", line_no);
    for (std::size_t k = 1; k < header.size(); ++k)
        if (detail::trim(header[k]) != "logit_" + std::to_string(k - 1))
            throw DataError("header field " + std::to_string(k + 1) + " must be logit_" + std::to_string(k - 1),
                            line_no);

    LabeledBatch batch;
    batch.num_classes = header.size() - 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        if (text.empty()) continue;
        const auto fields = detail::split_fields(text);
        if (fields.size() != batch.num_classes + 1)
            throw DataError("expected " + std::to_string(batch.num_classes + 1) + " fields, found " +
                                std::to_string(fields.size()),
                            line_no);
        const auto label_text = detail::trim(fields[0]);
        std::size_t label = 0;
        auto [lp, lec] = std::from_chars(label_text.data(), label_text.data() + label_text.size(), label);
        if (lec != std::errc{} || lp != label_text.data() + label_text.size() || label >= batch.num_classes)
            throw DataError("label '" + std::string(label_text) + "' is not an integer in [0, " +
                                std::to_string(batch.num_classes) + ")",
                            line_no);
        batch.labels.push_back(label);
        for (std::size_t k = 1; k < fields.size(); ++k) {
            const auto f = detail::trim(fields[k]);
            double v = 0.0;
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc{} || p != f.data() + f.size() || !std::isfinite(v))
                throw DataError("field " + std::to_string(k + 1) + " '" + std::string(f) + "' is not a finite number",
                                line_no);
            batch.logits.push_back(v);
        }
    }
    if (batch.labels.empty()) throw DataError("no data rows", line_no);
    return batch;
}

inline LabeledBatch read_logits_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        return read_logits(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

inline void write_logits_file(const std::filesystem::path& path, const LabeledBatch& batch) {
    std::ostringstream out;
    write_logits(out, batch);
    write_text_file(path, out.str());
}

// --- reports -------------------------------------------------------------

/// 64-bit FNV-1a, used for provenance hashes.
inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline Json to_json(const MetricReport& r) {
    Json j;
    j["ece"] = r.ece;
    j["ada_ece"] = r.ada_ece;
    j["classwise_ece"] = r.classwise_ece;
    j["mce"] = r.mce;
    j["nll"] = r.nll;
    j["error_rate"] = r.error_rate;
    if (r.temperature) j["temperature"] = *r.temperature;
    return j;
}

inline Json to_json(const std::vector<ReliabilityRow>& rows) {
    Json arr = Json::array();
    for (const auto& r : rows)
        arr.push_back({{"lo", r.lo}, {"hi", r.hi}, {"accuracy", r.accuracy}, {"confidence", r.confidence},
                       {"gap", r.gap}, {"count", r.count}});
    return arr;
}

inline Json to_json(const theory::RegionAnalysis& r) {
    return {{"gamma", r.gamma},   {"C", r.c},       {"v_m", r.v_m},
            {"v_prime", r.v_prime}, {"v_uc", r.v_uc}, {"reduction", r.reduction},
            {"tolerance", r.tolerance}};
}

inline std::string reliability_csv(const std::vector<ReliabilityRow>& rows) {
    std::ostringstream out;
    out << "lo,hi,accuracy,confidence,gap,count\n";
    for (const auto& r : rows)
        out << format_real(r.lo) << ',' << format_real(r.hi) << ',' << format_real(r.accuracy) << ','
            << format_real(r.confidence) << ',' << format_real(r.gap) << ',' << r.count << '\n';
    return out.str();
}

inline std::string trace_csv(const TrainTrace& trace) {
    std::ostringstream out;
    out << "epoch,lr,train_loss,test_ece,test_ece_ema,test_error\n";
    const auto curve = evaluate_over_training(trace);
    for (std::size_t i = 0; i < trace.epochs.size(); ++i) {
        const auto& r = trace.epochs[i];
        out << r.epoch << ',' << format_real(r.lr) << ',' << format_real(r.train_loss) << ','
            << format_real(r.test_ece) << ',' << format_real(curve[i].smoothed) << ',' << format_real(r.test_error)
            << '\n';
    }
    return out.str();
}

inline std::string phi_curve_csv(const theory::PhiCurve& curve) {
    std::ostringstream out;
    out << "v,phi_fl,phi_dfl,phi_diag\n";
    for (const auto& r : curve.rows)
        out << format_real(r.v) << ',' << format_real(r.focal) << ',' << format_real(r.dual) << ','
            << format_real(r.diagonal) << '\n';
    return out.str();
}

inline Json regions_json(const theory::PhiCurve& curve) {
    return {{"gamma", curve.gamma},
            {"C", curve.c},
            {"diagonal_variant", std::string(theory::variant_name(curve.diagonal))},
            {"fl", to_json(curve.focal_regions)},
            {"dfl", to_json(curve.dual_regions)},
            {"ucr_reduction_vs_fl", curve.dual_regions.v_uc - curve.focal_regions.v_prime}};
}

// --- reliability diagram --------------------------------------------------

/// Static SVG: per-bin accuracy bars over [lo, hi], confidence markers and
/// the identity diagonal.
inline std::string reliability_svg(const std::vector<ReliabilityRow>& rows, std::size_t num_bins) {
    constexpr double size = 400.0;
    constexpr double pad = 40.0;
    auto x = [&](double v) { return format_fixed(pad + v * size, 3); };
    auto y = [&](double v) { return format_fixed(pad + (1.0 - v) * size, 3); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_fixed(size + 2 * pad, 0) << "\" height=\""
        << format_fixed(size + 2 * pad, 0) << "\" viewBox=\"0 0 " << format_fixed(size + 2 * pad, 0) << ' '
        << format_fixed(size + 2 * pad, 0) << "\">\n";
    svg << "<rect x=\"" << x(0) << "\" y=\"" << y(1) << "\" width=\"" << format_fixed(size, 3) << "\" height=\""
        << format_fixed(size, 3) << "\" fill=\"white\" stroke=\"black\"/>\n";
    for (const auto& r : rows) {
        svg << "<rect class=\"accuracy\" x=\"" << x(r.lo) << "\" y=\"" << y(r.accuracy) << "\" width=\""
            << format_fixed((r.hi - r.lo) * size, 3) << "\" height=\"" << format_fixed(r.accuracy * size, 3)
            << "\" fill=\"#4a72b0\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
        svg << "<line class=\"confidence\" x1=\"" << x(r.lo) << "\" y1=\"" << y(r.confidence) << "\" x2=\""
            << x(r.hi) << "\" y2=\"" << y(r.confidence) << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    }
    svg << "<line class=\"identity\" x1=\"" << x(0) << "\" y1=\"" << y(0) << "\" x2=\"" << x(1) << "\" y2=\"" << y(1)
        << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
    svg << "<text x=\"" << format_fixed(pad + size / 2, 1) << "\" y=\"" << format_fixed(size + 1.75 * pad, 1)
        << "\" text-anchor=\"middle\" font-size=\"12\">confidence (" << num_bins << " bins)</text>\n";
    svg << "<text x=\"12\" y=\"" << format_fixed(pad + size / 2, 1) << "\" text-anchor=\"middle\" font-size=\"12\" "
        << "transform=\"rotate(-90 12 " << format_fixed(pad + size / 2, 1) << ")\">accuracy</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace dualcal::io

#endif  // DUALCAL_IO_HPP
