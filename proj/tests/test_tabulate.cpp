#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "swapsim/rng.hpp"
#include "swapsim/tabulate.hpp"

using namespace swapsim;

namespace {

AssociationResult v_of(const std::vector<std::int64_t>& counts, std::size_t rows,
                       std::size_t cols) {
    return cramers_v_counts(counts, rows, cols);
}

// Closed-form |phi| for a 2x2 table with all margins positive.
double abs_phi(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
    const double num = static_cast<double>(a) * static_cast<double>(d) -
                       static_cast<double>(b) * static_cast<double>(c);
    const double den = std::sqrt(static_cast<double>(a + b) * static_cast<double>(c + d) *
                                 static_cast<double>(a + c) * static_cast<double>(b + d));
    return std::abs(num) / den;
}

} // namespace

TEST_CASE("cross_tab counts cells and rejects a variable against itself") {
    Dataset::Builder b(testutil::small_schema());
    b.add_person("h1", "p1", "t1", std::vector<std::int32_t>{0, 0, 0, 0});
    b.add_person("h2", "p1", "t1", std::vector<std::int32_t>{0, 1, 0, 0});
    b.add_person("h3", "p1", "t1", std::vector<std::int32_t>{1, 1, 0, 0});
    b.add_person("h4", "p1", "t2", std::vector<std::int32_t>{1, 1, 0, 0});
    const Dataset ds = b.build();

    const ContingencyTable t = cross_tab(all_persons(ds), "gender", "marital");
    REQUIRE(t.rows() == 2);
    REQUIRE(t.cols() == 3);
    CHECK(t.n == 4);
    CHECK(t.at(0, 0) == 1);
    CHECK(t.at(0, 1) == 1);
    CHECK(t.at(1, 1) == 2);
    CHECK(t.at(1, 2) == 0);

    const ContingencyTable t1 = cross_tab(subset_by_tract(ds, "t1"), "gender", "marital");
    CHECK(t1.n == 3);
    CHECK(t1.at(1, 1) == 1);

    CHECK_THROWS_AS(cross_tab(all_persons(ds), "gender", "gender"), Error);
}

TEST_CASE("perfect association gives V = 1") {
    const auto r = v_of({5, 0, 0, 7}, 2, 2);
    REQUIRE(r.defined());
    CHECK_THAT(*r.v, Catch::Matchers::WithinAbs(1.0, 1e-12));

    // 3x3 diagonal, unequal cell counts
    const auto r3 = v_of({4, 0, 0, 0, 9, 0, 0, 0, 2}, 3, 3);
    REQUIRE(r3.defined());
    CHECK_THAT(*r3.v, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("exact independence gives V = 0") {
    // rows proportional: [10 20; 20 40]
    const auto r = v_of({10, 20, 20, 40}, 2, 2);
    REQUIRE(r.defined());
    CHECK_THAT(r.chi_square, Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THAT(*r.v, Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("reference 2x2 table reproduces the frozen value") {
    const auto r = v_of({10, 20, 30, 40}, 2, 2);
    REQUIRE(r.defined());
    // chi^2 = 4/12 + 4/18 + 4/28 + 4/42 = 0.79365..., V = sqrt(chi^2 / 100)
    CHECK_THAT(r.chi_square, Catch::Matchers::WithinAbs(0.7936507936507936, 1e-12));
    CHECK_THAT(*r.v, Catch::Matchers::WithinAbs(0.0890871, 1e-6));
    // independent closed form: phi for the same table
    CHECK_THAT(*r.v, Catch::Matchers::WithinAbs(abs_phi(10, 20, 30, 40), 1e-13));
}

TEST_CASE("2x2 V equals |phi| on random tables") {
    Rng rng(2718);
    for (int trial = 0; trial < 1000; ++trial) {
        // 1..50 per cell keeps every margin positive
        const std::int64_t a = 1 + static_cast<std::int64_t>(rng.below(50));
        const std::int64_t b = 1 + static_cast<std::int64_t>(rng.below(50));
        const std::int64_t c = 1 + static_cast<std::int64_t>(rng.below(50));
        const std::int64_t d = 1 + static_cast<std::int64_t>(rng.below(50));
        const auto r = v_of({a, b, c, d}, 2, 2);
        REQUIRE(r.defined());
        REQUIRE_THAT(*r.v, Catch::Matchers::WithinAbs(abs_phi(a, b, c, d), 1e-12));
    }
}

TEST_CASE("V is symmetric under transpose and label permutation") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t rows = 2 + rng.below(3);
        const std::size_t cols = 2 + rng.below(3);
        std::vector<std::int64_t> counts(rows * cols);
        for (auto& x : counts) x = static_cast<std::int64_t>(rng.below(30));
        const auto base = v_of(counts, rows, cols);

        std::vector<std::int64_t> transposed(rows * cols);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) transposed[c * rows + r] = counts[r * cols + c];
        const auto flipped = v_of(transposed, cols, rows);
        REQUIRE(base.defined() == flipped.defined());
        if (base.defined())
            CHECK_THAT(*flipped.v, Catch::Matchers::WithinAbs(*base.v, 1e-12));

        // swap two rows: association is label-free
        if (rows >= 2) {
            std::vector<std::int64_t> swapped = counts;
            for (std::size_t c = 0; c < cols; ++c)
                std::swap(swapped[0 * cols + c], swapped[1 * cols + c]);
            const auto permuted = v_of(swapped, rows, cols);
            REQUIRE(base.defined() == permuted.defined());
            if (base.defined())
                CHECK_THAT(*permuted.v, Catch::Matchers::WithinAbs(*base.v, 1e-12));
        }
    }
}

TEST_CASE("duplicating every record leaves V unchanged") {
    const std::vector<std::int64_t> counts{3, 7, 1, 9, 4, 6};
    const auto base = v_of(counts, 2, 3);
    std::vector<std::int64_t> tripled(counts);
    for (auto& x : tripled) x *= 3;
    const auto scaled = v_of(tripled, 2, 3);
    REQUIRE(base.defined());
    REQUIRE(scaled.defined());
    CHECK_THAT(*scaled.v, Catch::Matchers::WithinAbs(*base.v, 1e-12));
}

TEST_CASE("zero margins are removed before the statistic") {
    // middle column empty: effectively 2x2 [10 20; 30 40]
    const auto r = v_of({10, 0, 20, 30, 0, 40}, 2, 3);
    REQUIRE(r.defined());
    CHECK(r.effective_rows == 2);
    CHECK(r.effective_cols == 2);
    CHECK_THAT(*r.v, Catch::Matchers::WithinAbs(0.0890871, 1e-6));
}

TEST_CASE("degenerate tables yield an undefined V, not zero") {
    const auto empty = v_of({0, 0, 0, 0}, 2, 2);
    CHECK_FALSE(empty.defined());
    CHECK(empty.effective_rows == 0);

    // single effective row: V undefined, chi-square still zero-ish
    const auto one_row = v_of({5, 7, 0, 0}, 2, 2);
    CHECK_FALSE(one_row.defined());
    CHECK(one_row.effective_rows == 1);
    CHECK(one_row.effective_cols == 2);
    CHECK_THAT(one_row.chi_square, Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("binning coarsens an ordered variable with range labels") {
    Dataset::Builder b(testutil::small_schema());
    b.add_person("h1", "p1", "t1", std::vector<std::int32_t>{0, 0, 0, 0});
    b.add_person("h2", "p1", "t1", std::vector<std::int32_t>{0, 0, 1, 1});
    b.add_person("h3", "p1", "t1", std::vector<std::int32_t>{0, 0, 2, 2});
    const Dataset ds = b.build();

    const Dataset binned = bin_variable(ds, "age", {1});
    const auto& var = binned.schema().variables[2];
    CHECK(var.levels == std::vector<std::string>{"young", "mid..old"});
    CHECK(binned.value(0, 2) == 0);
    CHECK(binned.value(1, 2) == 1);
    CHECK(binned.value(2, 2) == 1);

    const Dataset two_cuts = bin_variable(ds, "income", {1, 2});
    CHECK(two_cuts.schema().variables[3].levels ==
          std::vector<std::string>{"low", "mid", "high"});

    CHECK_THROWS_AS(bin_variable(ds, "gender", {1}), Error);        // nominal
    CHECK_THROWS_AS(bin_variable(ds, "age", {}), Error);            // no cuts
    CHECK_THROWS_AS(bin_variable(ds, "age", {0}), Error);           // cut at 0
    CHECK_THROWS_AS(bin_variable(ds, "age", {3}), Error);           // cut at count
    CHECK_THROWS_AS(bin_variable(ds, "age", {2, 2}), Error);        // not increasing
    CHECK_THROWS_AS(bin_variable(ds, "height", {1}), Error);        // unknown
}

TEST_CASE("binned cross tab aggregates the underlying cells") {
    Dataset::Builder b(testutil::small_schema());
    for (int i = 0; i < 6; ++i)
        b.add_person("h" + std::to_string(i), "p1", "t1",
                     std::vector<std::int32_t>{i % 2, 0, i % 3, 0});
    const Dataset ds = b.build();
    const ContingencyTable fine = cross_tab(all_persons(ds), "age", "gender");
    const Dataset binned = bin_variable(ds, "age", {1});
    const ContingencyTable coarse = cross_tab(all_persons(binned), "age", "gender");
    REQUIRE(coarse.rows() == 2);
    for (std::size_t c = 0; c < coarse.cols(); ++c) {
        CHECK(coarse.at(0, c) == fine.at(0, c));
        CHECK(coarse.at(1, c) == fine.at(1, c) + fine.at(2, c));
    }
}

TEST_CASE("table CSV layout puts labels on both axes") {
    ContingencyTable t;
    t.row_variable = "poor";
    t.col_variable = "young";
    t.row_labels = {"0", "1"};
    t.col_labels = {"0", "1"};
    t.counts = {10, 20, 30, 40};
    t.n = 100;
    std::ostringstream out;
    write_table_csv(t, out);
    CHECK(out.str() == "poor\\young,0,1\n0,10,20\n1,30,40\n");
}
