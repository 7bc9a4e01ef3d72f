#pragma once

#include <cstddef>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mlmn/errors.hpp"

namespace mlmn::training {

    // Precision, recall and F1 of the positive (match) class.
    struct Metrics {
        std::size_t tp = 0;
        std::size_t fp = 0;
        std::size_t fn = 0;

        double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
        double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
        double f1() const {
            const double p = precision(), r = recall();
            return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
        }

        Metrics& operator+=(const Metrics& o) {
            tp += o.tp;
            fp += o.fp;
            fn += o.fn;
            return *this;
        }

        bool operator==(const Metrics&) const = default;
    };

    // Compares a predicted id set against a gold id set; both sorted ascending.
    template <class T>
    Metrics compare_sets(const std::vector<T>& predicted, const std::vector<T>& gold) {
        Metrics m;
        std::size_t i = 0, j = 0;
        while (i < predicted.size() || j < gold.size()) {
            if (j == gold.size() || (i < predicted.size() && predicted[i] < gold[j])) {
                ++m.fp;
                ++i;
            } else if (i == predicted.size() || gold[j] < predicted[i]) {
                ++m.fn;
                ++j;
            } else {
                ++m.tp;
                ++i;
                ++j;
            }
        }
        return m;
    }

    // %.17g so that values round-trip exactly
    inline std::string format_double(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    inline const char* metrics_csv_header = "split,P,R,F1,TP,FP,FN";

    inline std::string metrics_csv_row(const std::string& split, const Metrics& m) {
        return split + "," + format_double(m.precision()) + "," + format_double(m.recall()) + "," +
               format_double(m.f1()) + "," + std::to_string(m.tp) + "," + std::to_string(m.fp) + "," +
               std::to_string(m.fn);
    }

    struct NamedMetrics {
        std::string split;
        Metrics metrics;
    };

    inline void write_metrics_csv(std::ostream& os, const std::vector<NamedMetrics>& rows) {
        os << metrics_csv_header << '\n';
        for (const auto& r : rows) os << metrics_csv_row(r.split, r.metrics) << '\n';
    }

    // Reads the counts back; P, R and F1 are recomputed and must agree.
    inline std::vector<NamedMetrics> read_metrics_csv(std::istream& is) {
        std::string line;
        if (!std::getline(is, line) || line != metrics_csv_header) throw InputError("metrics csv: bad header");
        std::vector<NamedMetrics> out;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::vector<std::string> f;
            std::stringstream ss(line);
            for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
            if (f.size() != 7) throw InputError("metrics csv: expected 7 fields: " + line);
            NamedMetrics r;
            r.split = f[0];
            try {
                r.metrics.tp = std::stoull(f[4]);
                r.metrics.fp = std::stoull(f[5]);
                r.metrics.fn = std::stoull(f[6]);
            } catch (const std::exception&) {
                throw InputError("metrics csv: bad count in: " + line);
            }
            if (metrics_csv_row(r.split, r.metrics) != line) throw InputError("metrics csv: inconsistent row: " + line);
            out.push_back(std::move(r));
        }
        return out;
    }

}  // namespace mlmn::training
