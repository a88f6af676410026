#include <catch2/catch_amalgamated.hpp>

#include "crosshash/retrieval.hpp"
#include "helpers.hpp"

using namespace crosshash;

namespace {

// Naive reference: distance counted bit by bit on unpacked +-1 vectors.
std::size_t hamming_oracle(const CodeTable& a, std::size_t ia, const CodeTable& b,
                           std::size_t ib) {
    std::size_t d = 0;
    for (std::size_t k = 0; k < a.bits_per_code; ++k) {
        const int va = a.get_bit(ia, k) ? 1 : -1;
        const int vb = b.get_bit(ib, k) ? 1 : -1;
        d += va != vb;
    }
    return d;
}

CodeTable random_codes(Rng& rng, std::size_t n, std::size_t bits) {
    CodeTable t(n, bits);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < bits; ++k) t.set_bit(i, k, rng.uniform() < 0.5);
    return t;
}

}  // namespace

TEST_CASE("binarize follows the sign rule including zero", "[retrieval]") {
    Matrix z(1, 4);
    z(0, 0) = 0.3; z(0, 1) = -0.7; z(0, 2) = 0.0; z(0, 3) = 1.0;
    const CodeTable t = binarize(z);
    REQUIRE(t.get_bit(0, 0));
    REQUIRE_FALSE(t.get_bit(0, 1));
    REQUIRE_FALSE(t.get_bit(0, 2));  // zero encodes -1
    REQUIRE(t.get_bit(0, 3));

    Matrix pos(1, 6, 0.4);
    const CodeTable all = binarize(pos);
    for (std::size_t k = 0; k < 6; ++k) REQUIRE(all.get_bit(0, k));

    Matrix bad(1, 2);
    bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(binarize(bad), std::invalid_argument);
}

TEST_CASE("binarize of the negation is the complement when no entry is zero", "[retrieval]") {
    Rng rng(3, "neg");
    Matrix z = testutil::random_matrix(rng, 5, 9, -1.0, 1.0);
    for (double& v : z.data)
        if (v == 0.0) v = 0.5;
    Matrix neg = z;
    for (double& v : neg.data) v = -v;
    const CodeTable a = binarize(z);
    const CodeTable b = binarize(neg);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t k = 0; k < 9; ++k) REQUIRE(a.get_bit(i, k) != b.get_bit(i, k));
}

TEST_CASE("hamming distance basics", "[retrieval]") {
    CodeTable t(3, 8);
    // 10110010 and 10011010
    const std::string a = "10110010", b = "10011010";
    for (std::size_t k = 0; k < 8; ++k) {
        t.set_bit(0, k, a[k] == '1');
        t.set_bit(1, k, b[k] == '1');
        t.set_bit(2, k, a[k] != '1');  // complement of code 0
    }
    REQUIRE(hamming_distance(t, 0, t, 0) == 0);
    REQUIRE(hamming_distance(t, 0, t, 2) == 8);
    REQUIRE(hamming_distance(t, 0, t, 1) == hamming_oracle(t, 0, t, 1));
    REQUIRE(hamming_distance(t, 0, t, 1) == 2);

    CodeTable other(1, 9);
    REQUIRE_THROWS_AS(hamming_distance(t, 0, other, 0), std::invalid_argument);
}

TEST_CASE("packed distance equals the unpacked oracle for widths 1..128", "[retrieval]") {
    Rng rng(17, "widths");
    for (std::size_t bits = 1; bits <= 128; ++bits) {
        const CodeTable t = random_codes(rng, 4, bits);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                REQUIRE(hamming_distance(t, i, t, j) == hamming_oracle(t, i, t, j));
    }
}

TEST_CASE("hamming distance satisfies the triangle inequality", "[retrieval]") {
    Rng rng(23, "tri");
    const CodeTable t = random_codes(rng, 30, 33);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t a = rng.index(30), b = rng.index(30), c = rng.index(30);
        REQUIRE(hamming_distance(t, a, t, c) <=
                hamming_distance(t, a, t, b) + hamming_distance(t, b, t, c));
    }
}

TEST_CASE("rank_database orders by distance then id", "[retrieval]") {
    Rng rng(29, "rank");
    const CodeTable db = random_codes(rng, 10, 12);
    const HammingIndex index = HammingIndex::build(db);

    // a database of one item puts that item first
    CodeTable one(1, 12);
    for (std::size_t k = 0; k < 12; ++k) one.set_bit(0, k, rng.uniform() < 0.5);
    const HammingIndex single = HammingIndex::build(one);
    const auto lone = rank_database(one.code(0), single);
    REQUIRE(lone.size() == 1);
    REQUIRE(lone[0].distance == 0);

    // querying with an existing code ranks it before anything farther
    const auto hits = rank_database(db.code(3), index);
    REQUIRE(hits.front().id == 3);
    REQUIRE(hits.front().distance == 0);

    // output is a permutation, ascending by (distance, id)
    std::set<std::size_t> seen;
    for (std::size_t r = 0; r < hits.size(); ++r) {
        seen.insert(hits[r].id);
        if (r > 0) {
            REQUIRE(hits[r].distance >= hits[r - 1].distance);
            if (hits[r].distance == hits[r - 1].distance)
                REQUIRE(hits[r].id > hits[r - 1].id);
        }
    }
    REQUIRE(seen.size() == 10);

    // matches a naive full comparison on random queries
    for (int rep = 0; rep < 10; ++rep) {
        CodeTable q(1, 12);
        for (std::size_t k = 0; k < 12; ++k) q.set_bit(0, k, rng.uniform() < 0.5);
        const auto got = rank_database(q.code(0), index);
        std::vector<RankedHit> expect;
        for (std::size_t i = 0; i < 10; ++i) expect.push_back({i, hamming_oracle(q, 0, db, i)});
        std::sort(expect.begin(), expect.end(), [](const RankedHit& x, const RankedHit& y) {
            return x.distance != y.distance ? x.distance < y.distance : x.id < y.id;
        });
        for (std::size_t i = 0; i < 10; ++i) {
            REQUIRE(got[i].id == expect[i].id);
            REQUIRE(got[i].distance == expect[i].distance);
        }
    }
}

TEST_CASE("code file round trip and parser diagnostics", "[retrieval]") {
    const auto dir = testutil::temp_dir("codes");
    Rng rng(31, "codes");
    const CodeTable t = random_codes(rng, 7, 19);
    save_codes(t, dir / "codes.txt");
    REQUIRE(load_codes(dir / "codes.txt") == t);

    {
        std::ofstream bad(dir / "bad.txt");
        bad << "2 4\n1010\n101\n";
    }
    REQUIRE_THROWS_MATCHES(load_codes(dir / "bad.txt"), IoError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("line 3")));

    {
        std::ofstream bad(dir / "badchar.txt");
        bad << "1 4\n10x0\n";
    }
    REQUIRE_THROWS_AS(load_codes(dir / "badchar.txt"), IoError);
    REQUIRE_THROWS_AS(load_codes(dir / "missing.txt"), IoError);
}
