#include <catch2/catch_amalgamated.hpp>

#include "crosshash/matrix.hpp"
#include "crosshash/rng.hpp"
#include "helpers.hpp"

using namespace crosshash;

TEST_CASE("matmul identity and orthogonal cases", "[matrix]") {
    Matrix a(2, 2);
    a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
    const Matrix out = matmul(Matrix::identity(2), a);
    REQUIRE(out == a);

    Matrix row(1, 2);
    row(0, 0) = 1; row(0, 1) = 0;
    Matrix col(2, 1);
    col(0, 0) = 0; col(1, 0) = 1;
    const Matrix prod = matmul(row, col);
    REQUIRE(prod.rows == 1);
    REQUIRE(prod.cols == 1);
    REQUIRE(prod(0, 0) == 0.0);
}

TEST_CASE("matmul rejects mismatched shapes naming both", "[matrix]") {
    const Matrix a(3, 4), b(5, 2);
    REQUIRE_THROWS_MATCHES(matmul(a, b), std::invalid_argument,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("3x4") &&
                               Catch::Matchers::ContainsSubstring("5x2")));
}

TEST_CASE("matmul is associative on random matrices", "[matrix]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed, "assoc");
        const Matrix a = testutil::random_matrix(rng, 4, 3);
        const Matrix b = testutil::random_matrix(rng, 3, 5);
        const Matrix c = testutil::random_matrix(rng, 5, 2);
        const Matrix left = matmul(matmul(a, b), c);
        const Matrix right = matmul(a, matmul(b, c));
        for (std::size_t i = 0; i < left.data.size(); ++i)
            REQUIRE(testutil::close_rel(left.data[i], right.data[i], 1e-9, 1e-12));
    }
}

TEST_CASE("matmul_at equals transpose-then-multiply", "[matrix]") {
    Rng rng(7, "at");
    const Matrix a = testutil::random_matrix(rng, 6, 4);
    const Matrix b = testutil::random_matrix(rng, 6, 3);
    const Matrix direct = matmul_at(a, b);
    const Matrix reference = matmul(transpose(a), b);
    REQUIRE(direct.rows == 4);
    REQUIRE(direct.cols == 3);
    for (std::size_t i = 0; i < direct.data.size(); ++i)
        REQUIRE(testutil::close_rel(direct.data[i], reference.data[i], 1e-12, 1e-14));
}

TEST_CASE("tanh_elementwise values and saturation", "[matrix]") {
    Matrix m(1, 3);
    m(0, 0) = 0.0; m(0, 1) = 50.0; m(0, 2) = 1.0;
    const Matrix out = tanh_elementwise(m);
    REQUIRE(out(0, 0) == 0.0);
    REQUIRE(out(0, 1) > 1.0 - 1e-9);
    REQUIRE(out(0, 1) < 1.0);
    REQUIRE_THAT(out(0, 2), Catch::Matchers::WithinAbs(0.76159415595576489, 1e-12));
}

TEST_CASE("tanh output strictly inside (-1,1) for any finite input", "[matrix]") {
    Rng rng(3, "tanh");
    Matrix m(1, 200);
    for (std::size_t k = 0; k < 200; ++k) m(0, k) = rng.uniform(-1e6, 1e6);
    m(0, 0) = 1e308;
    m(0, 1) = -1e308;
    const Matrix out = tanh_elementwise(m);
    for (double v : out.data) {
        REQUIRE(v > -1.0);
        REQUIRE(v < 1.0);
    }
}

TEST_CASE("sigmoid stability and symmetry", "[matrix]") {
    REQUIRE(sigmoid(0.0) == 0.5);
    const double tiny = sigmoid(-1000.0);
    REQUIRE(std::isfinite(tiny));
    REQUIRE(tiny >= 0.0);
    REQUIRE(tiny <= 1e-300);
    REQUIRE(std::isfinite(sigmoid(700.0)));

    Rng rng(5, "sigmoid");
    double prev = sigmoid(-30.0);
    for (int k = 0; k < 200; ++k) {
        const double x = rng.uniform(-30.0, 30.0);
        REQUIRE_THAT(sigmoid(x) + sigmoid(-x), Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
    for (double x = -29.5; x <= 30.0; x += 0.5) {
        const double cur = sigmoid(x);
        REQUIRE(cur > prev);
        prev = cur;
    }
}

TEST_CASE("gaussian_kernel oracle values", "[matrix]") {
    const std::vector<double> z{0.25, -0.5};
    REQUIRE(gaussian_kernel(z, z, 2.0) == 1.0);

    const std::vector<double> a{0.0}, b{1.0};
    REQUIRE_THAT(gaussian_kernel(a, b, 1.0),
                 Catch::Matchers::WithinAbs(0.36787944117144233, 1e-12));

    const std::vector<double> c{0.0, 0.0}, d{3.0, 4.0};
    REQUIRE_THAT(gaussian_kernel(c, d, 0.1),
                 Catch::Matchers::WithinAbs(0.082084998623898795, 1e-12));

    REQUIRE_THROWS_AS(gaussian_kernel(a, c, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(gaussian_kernel(a, b, 0.0), std::invalid_argument);
}

TEST_CASE("gaussian_kernel symmetric and in (0,1]", "[matrix]") {
    Rng rng(11, "kernel");
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> a(4), b(4);
        for (auto& v : a) v = rng.uniform(-2, 2);
        for (auto& v : b) v = rng.uniform(-2, 2);
        const double kab = gaussian_kernel(a, b, 0.7);
        REQUIRE(kab == gaussian_kernel(b, a, 0.7));
        REQUIRE(kab > 0.0);
        REQUIRE(kab <= 1.0);
    }
}
