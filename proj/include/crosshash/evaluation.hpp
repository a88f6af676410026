// evaluation.hpp — label-overlap relevance, average precision over Hamming
// rankings, and macro-averaged precision-recall curves.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crosshash/io_util.hpp"
#include "crosshash/retrieval.hpp"
#include "crosshash/types.hpp"

namespace crosshash {

inline int relevance(const LabelSet& query_labels, const LabelSet& item_labels) {
    return labels_intersect(query_labels, item_labels) ? 1 : 0;
}

// AP over a ranked 0/1 relevance list: mean of precision@p at each relevant
// position p, divided by the number of relevant items. All-zero lists score 0.
inline double average_precision(const std::vector<int>& ranked_relevance) {
    std::size_t relevant = 0;
    double precision_sum = 0.0;
    for (std::size_t p = 0; p < ranked_relevance.size(); ++p) {
        if (ranked_relevance[p]) {
            ++relevant;
            precision_sum += static_cast<double>(relevant) / static_cast<double>(p + 1);
        }
    }
    if (relevant == 0) return 0.0;
    return precision_sum / static_cast<double>(relevant);
}

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

struct EvalReport {
    double map = 0.0;
    std::vector<double> per_query_ap;
    std::vector<PrPoint> pr_curve;
    std::size_t query_count = 0;
    std::size_t database_count = 0;
    std::size_t bits = 0;
};

namespace detail {

inline std::vector<std::vector<int>> relevance_lists(const CodeTable& queries,
                                                     const std::vector<LabelSet>& query_labels,
                                                     const HammingIndex& index,
                                                     const std::vector<LabelSet>& db_labels) {
    if (queries.item_count == 0)
        throw std::invalid_argument("evaluation: query set is empty");
    if (queries.bits_per_code != index.codes.bits_per_code)
        throw std::invalid_argument("evaluation: query codes have " +
                                    std::to_string(queries.bits_per_code) + " bits, index has " +
                                    std::to_string(index.codes.bits_per_code));
    if (query_labels.size() != queries.item_count)
        throw std::invalid_argument("evaluation: " + std::to_string(queries.item_count) +
                                    " queries but " + std::to_string(query_labels.size()) +
                                    " query label sets");
    if (db_labels.size() != index.codes.item_count)
        throw std::invalid_argument("evaluation: " + std::to_string(index.codes.item_count) +
                                    " database items but " + std::to_string(db_labels.size()) +
                                    " database label sets");
    std::vector<std::vector<int>> lists(queries.item_count);
    for (std::size_t q = 0; q < queries.item_count; ++q) {
        const auto ranking = rank_database(queries.code(q), index);
        lists[q].resize(ranking.size());
        for (std::size_t r = 0; r < ranking.size(); ++r)
            lists[q][r] = relevance(query_labels[q], db_labels[ranking[r].id]);
    }
    return lists;
}

}  // namespace detail

// MAP over the full ranking by default; cutoff > 0 restricts each AP to the
// top `cutoff` positions (denominator min(relevant, cutoff)). Queries without
// relevant items count as AP 0.
inline EvalReport mean_average_precision(const CodeTable& queries,
                                         const std::vector<LabelSet>& query_labels,
                                         const HammingIndex& index,
                                         const std::vector<LabelSet>& db_labels,
                                         std::size_t cutoff = 0) {
    const auto lists = detail::relevance_lists(queries, query_labels, index, db_labels);
    EvalReport report;
    report.query_count = queries.item_count;
    report.database_count = index.codes.item_count;
    report.bits = queries.bits_per_code;
    for (const auto& flags : lists) {
        double ap;
        if (cutoff == 0 || cutoff >= flags.size()) {
            ap = average_precision(flags);
        } else {
            std::size_t total_relevant = 0;
            for (int f : flags) total_relevant += f;
            std::size_t hit = 0;
            double psum = 0.0;
            for (std::size_t p = 0; p < cutoff; ++p)
                if (flags[p]) {
                    ++hit;
                    psum += static_cast<double>(hit) / static_cast<double>(p + 1);
                }
            const std::size_t denom = std::min(total_relevant, cutoff);
            ap = denom == 0 ? 0.0 : psum / static_cast<double>(denom);
        }
        report.per_query_ap.push_back(ap);
        report.map += ap;
    }
    report.map /= static_cast<double>(report.per_query_ap.size());
    return report;
}

// Macro-averaged precision@r / recall@r for r = 1..database size. Queries
// with no relevant item have no defined recall and are excluded from the
// averages.
inline std::vector<PrPoint> precision_recall_curve(const CodeTable& queries,
                                                   const std::vector<LabelSet>& query_labels,
                                                   const HammingIndex& index,
                                                   const std::vector<LabelSet>& db_labels) {
    const auto lists = detail::relevance_lists(queries, query_labels, index, db_labels);
    std::vector<const std::vector<int>*> scored;
    std::vector<double> totals;
    for (const auto& flags : lists) {
        std::size_t total = 0;
        for (int f : flags) total += f;
        if (total > 0) {
            scored.push_back(&flags);
            totals.push_back(static_cast<double>(total));
        }
    }
    std::vector<PrPoint> curve;
    if (scored.empty()) return curve;

    const std::size_t depth = index.codes.item_count;
    std::vector<std::size_t> hits(scored.size(), 0);
    curve.reserve(depth);
    for (std::size_t r = 1; r <= depth; ++r) {
        double precision = 0.0, recall = 0.0;
        for (std::size_t q = 0; q < scored.size(); ++q) {
            hits[q] += (*scored[q])[r - 1];
            precision += static_cast<double>(hits[q]) / static_cast<double>(r);
            recall += static_cast<double>(hits[q]) / totals[q];
        }
        curve.push_back({recall / static_cast<double>(scored.size()),
                         precision / static_cast<double>(scored.size())});
    }
    return curve;
}

// Report file: one header line "map n_queries n_db bits", then one
// "recall precision" line per curve point.
inline void save_report(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << format_double(report.map) << " " << report.query_count << " "
        << report.database_count << " " << report.bits << "\n";
    for (const PrPoint& p : report.pr_curve)
        out << format_double(p.recall) << " " << format_double(p.precision) << "\n";
    finish_output(out, path);
}

}  // namespace crosshash
