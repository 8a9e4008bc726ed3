#pragma once

#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "zslice/metrics.hpp"
#include "zslice/pipeline.hpp"
#include "zslice/sweep.hpp"

// Comma-separated result tables, one row per configuration or study.

namespace zslice::tables {

namespace detail {

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string metrics(const EvalReport& r) {
    return fixed(r.precision, 6) + ',' + fixed(r.recall, 6) + ',' + fixed(r.f1, 6) + ',' +
           std::to_string(r.counts.tp) + ',' + std::to_string(r.counts.fp) + ',' + std::to_string(r.counts.fn);
}

/// Quotes a field containing a comma, quote or newline.
inline std::string csv_field(const std::string& v) {
    if (v.find_first_of(",\"\n\r") == std::string::npos) return v;
    std::string q = "\"";
    for (char c : v) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

inline const char* kTestColumns = ",test_precision,test_recall,test_f1,test_tp,test_fp,test_fn";

// Held-out columns for row i, or nothing when no test corpus was given.
inline std::string test_columns(std::span<const EvalReport> test, std::size_t i) {
    return test.empty() ? std::string() : ',' + metrics(test[i]);
}

inline bool uses_tracker(const MethodConfig& c) {
    return c.mode == Mode::bytetrack || c.mode == Mode::bidirectional || c.mode == Mode::hybrid;
}

}  // namespace detail

/// Method row columns: tracker settings print as n/a for non-tracking modes.
inline std::string method_columns(const MethodConfig& c) {
    if (!detail::uses_tracker(c)) return std::string(to_string(c.mode)) + ",n/a,n/a,n/a";
    return std::string(to_string(c.mode)) + ',' + detail::fixed(c.tracker.track_activation, 2) + ',' +
           detail::fixed(c.tracker.min_match, 2) + ',' + std::to_string(c.tracker.lost_buffer);
}

/// `test`, when non-empty, holds one held-out report per row.
inline void write_grid(std::ostream& out, const std::vector<sweep::GridRow>& rows,
                       std::span<const EvalReport> test = {}) {
    if (!test.empty() && test.size() != rows.size()) throw std::invalid_argument("write_grid: test size mismatch");
    out << "rank,method,track_activation,min_match,lost_buffer,precision,recall,f1,tp,fp,fn"
        << (test.empty() ? "" : detail::kTestColumns) << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out << (i + 1) << ',' << method_columns(rows[i].config) << ',' << detail::metrics(rows[i].report)
            << detail::test_columns(test, i) << '\n';
    }
}

inline void write_thresholds(std::ostream& out, const std::vector<sweep::ThresholdRow>& rows,
                             std::span<const EvalReport> test = {}) {
    if (!test.empty() && test.size() != rows.size()) throw std::invalid_argument("write_thresholds: test size mismatch");
    out << "threshold,precision,recall,f1,tp,fp,fn,best" << (test.empty() ? "" : detail::kTestColumns) << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out << detail::fixed(r.threshold, 2) << ',' << detail::metrics(r.report) << ',' << (r.best ? "*" : "")
            << detail::test_columns(test, i) << '\n';
    }
}

/// Per-study rows followed by the corpus row.
inline void write_eval(std::ostream& out, const CorpusReport& report) {
    out << "scope,precision,recall,f1,tp,fp,fn\n";
    for (const auto& s : report.studies) out << detail::csv_field(s.scope) << ',' << detail::metrics(s) << '\n';
    out << "corpus," << detail::metrics(report.corpus) << '\n';
}

struct MethodRow {
    MethodConfig config;
    EvalReport report;
};

/// One row per method, in the column layout of an ablation table.
inline void write_methods(std::ostream& out, const std::vector<MethodRow>& rows) {
    out << "method,track_activation,min_match,lost_buffer,precision,recall,f1,tp,fp,fn\n";
    for (const auto& r : rows) out << method_columns(r.config) << ',' << detail::metrics(r.report) << '\n';
}

}  // namespace zslice::tables
