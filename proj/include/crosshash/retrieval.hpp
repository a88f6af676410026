// retrieval.hpp — sign thresholding, packed Hamming distance, and exhaustive
// ranked scans. Distances are exact, so the evaluation layer can rely on a
// deterministic total order (distance, then item id).
#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crosshash/errors.hpp"
#include "crosshash/io_util.hpp"
#include "crosshash/matrix.hpp"
#include "crosshash/types.hpp"

namespace crosshash {

// h = sgn(z): bit 1 for z > 0, bit 0 (meaning -1) otherwise; zero goes to -1.
inline CodeTable binarize(const Matrix& z) {
    if (!z.all_finite())
        throw std::invalid_argument("binarize: activations contain non-finite entries");
    CodeTable table(z.rows, z.cols);
    for (std::size_t i = 0; i < z.rows; ++i)
        for (std::size_t k = 0; k < z.cols; ++k)
            if (z(i, k) > 0.0) table.set_bit(i, k, true);
    return table;
}

inline std::size_t hamming_distance(std::span<const std::uint64_t> a,
                                    std::span<const std::uint64_t> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("hamming_distance: word count mismatch " +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    std::size_t dist = 0;
    for (std::size_t w = 0; w < a.size(); ++w) dist += std::popcount(a[w] ^ b[w]);
    return dist;
}

inline std::size_t hamming_distance(const CodeTable& a, std::size_t ia, const CodeTable& b,
                                    std::size_t ib) {
    if (a.bits_per_code != b.bits_per_code)
        throw std::invalid_argument("hamming_distance: code width mismatch " +
                                    std::to_string(a.bits_per_code) + " vs " +
                                    std::to_string(b.bits_per_code));
    return hamming_distance(a.code(ia), b.code(ib));
}

struct HammingIndex {
    CodeTable codes;
    Modality modality = Modality::Y;
    std::vector<std::size_t> ids;  // defaults to 0..n-1

    static HammingIndex build(CodeTable codes, Modality modality = Modality::Y) {
        HammingIndex idx;
        idx.modality = modality;
        idx.ids.resize(codes.item_count);
        for (std::size_t i = 0; i < codes.item_count; ++i) idx.ids[i] = i;
        idx.codes = std::move(codes);
        return idx;
    }
};

struct RankedHit {
    std::size_t id = 0;
    std::size_t distance = 0;
};

// Full ascending scan; ties broken by ascending id.
inline std::vector<RankedHit> rank_database(std::span<const std::uint64_t> query_code,
                                            const HammingIndex& index) {
    const std::size_t wpc = index.codes.words_per_code();
    if (query_code.size() != wpc)
        throw std::invalid_argument("rank_database: query has " +
                                    std::to_string(query_code.size()) + " words, index codes have " +
                                    std::to_string(wpc));
    std::vector<RankedHit> hits(index.codes.item_count);
    for (std::size_t i = 0; i < index.codes.item_count; ++i)
        hits[i] = {index.ids[i], hamming_distance(query_code, index.codes.code(i))};
    std::sort(hits.begin(), hits.end(), [](const RankedHit& a, const RankedHit& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.id < b.id;
    });
    return hits;
}

// Code file: "n b" header, then n lines of b characters in {0,1} (1 = +1).
inline void save_codes(const CodeTable& table, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << table.item_count << " " << table.bits_per_code << "\n";
    std::string line(table.bits_per_code, '0');
    for (std::size_t i = 0; i < table.item_count; ++i) {
        for (std::size_t k = 0; k < table.bits_per_code; ++k)
            line[k] = table.get_bit(i, k) ? '1' : '0';
        out << line << "\n";
    }
    finish_output(out, path);
}

inline CodeTable load_codes(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    const std::string where = "code file '" + path.string() + "'";
    std::string line;
    if (!std::getline(in, line)) throw IoError(where + ": missing header");
    const auto header = split_tokens(line);
    if (header.size() != 2) throw IoError(where + ": header must be 'n b'");
    const long long n = parse_int(header[0], where);
    const long long b = parse_int(header[1], where);
    if (n < 0 || b < 1) throw IoError(where + ": invalid header counts");

    CodeTable table(static_cast<std::size_t>(n), static_cast<std::size_t>(b));
    for (long long i = 0; i < n; ++i) {
        if (!std::getline(in, line))
            throw IoError(where + ": expected " + std::to_string(n) + " code lines, got " +
                          std::to_string(i));
        if (line.size() != static_cast<std::size_t>(b))
            throw IoError(where + ": line " + std::to_string(i + 2) + " has " +
                          std::to_string(line.size()) + " characters, expected " +
                          std::to_string(b));
        for (long long k = 0; k < b; ++k) {
            if (line[k] == '1') table.set_bit(i, k, true);
            else if (line[k] != '0')
                throw IoError(where + ": line " + std::to_string(i + 2) +
                              " contains character '" + std::string(1, line[k]) + "'");
        }
    }
    return table;
}

}  // namespace crosshash
