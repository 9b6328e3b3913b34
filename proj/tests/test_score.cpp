#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "confab/score.hpp"

using namespace confab;

TEST_CASE("perplexity of certain tokens is 1") {
    CHECK(perplexity_score({{1.0, 1.0, 1.0}}) == Catch::Approx(1.0));
}

TEST_CASE("perplexity of constant probability p is 1/p") {
    CHECK(perplexity_score({{0.5, 0.5}}) == Catch::Approx(2.0));
}

TEST_CASE("perplexity is the reciprocal geometric mean") {
    // 1 / sqrt(0.5 * 0.125) = 1 / sqrt(1/16) = 4
    CHECK(perplexity_score({{0.5, 0.125}}) == Catch::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("perplexity rejects an empty sequence") {
    CHECK_THROWS_AS(perplexity_score({{}}), InvalidInputError);
}

TEST_CASE("perplexity rejects out-of-range probabilities") {
    CHECK_THROWS_AS(perplexity_score({{0.5, 1.5}}), InvalidInputError);
    CHECK_THROWS_AS(perplexity_score({{-0.1}}), InvalidInputError);
}

TEST_CASE("perplexity stays finite on zero probabilities via the floor") {
    const double u = perplexity_score({{0.0}});
    CHECK(std::isfinite(u));
    CHECK(u == Catch::Approx(1e12));
}

TEST_CASE("perplexity is permutation invariant") {
    Rng rng(101);
    for (int round = 0; round < 50; ++round) {
        const std::size_t n = 1 + rng.index(12);
        std::vector<double> probs(n);
        for (double& p : probs) p = rng.uniform(0.01, 1.0);
        const double base = perplexity_score({probs});
        std::vector<double> shuffled = probs;
        rng.shuffle(shuffled);
        CHECK(perplexity_score({shuffled}) == Catch::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("raising one token probability strictly lowers perplexity") {
    Rng rng(202);
    for (int round = 0; round < 50; ++round) {
        std::vector<double> probs(4);
        for (double& p : probs) p = rng.uniform(0.05, 0.8);
        const double before = perplexity_score({probs});
        const std::size_t which = rng.index(probs.size());
        probs[which] = std::min(1.0, probs[which] + rng.uniform(0.05, 0.2));
        CHECK(perplexity_score({probs}) < before);
    }
}

namespace {

// Independent largest-remainder apportionment used as an oracle.
std::array<std::size_t, 4> oracle_sizes(std::size_t n, std::array<double, 4> ratios) {
    double total = ratios[0] + ratios[1] + ratios[2] + ratios[3];
    std::array<double, 4> quota{};
    std::array<std::size_t, 4> sizes{};
    std::size_t used = 0;
    for (int i = 0; i < 4; ++i) {
        quota[i] = n * ratios[i] / total;
        sizes[i] = static_cast<std::size_t>(quota[i]);
        used += sizes[i];
    }
    while (used < n) {
        int best = -1;
        double best_frac = -1.0;
        for (int i = 0; i < 4; ++i) {
            const double frac = quota[i] - static_cast<double>(sizes[i]);
            if (frac > best_frac + 1e-15) {
                best_frac = frac;
                best = i;
            }
        }
        ++sizes[best];
        ++used;
    }
    return sizes;
}

std::vector<std::string> make_ids(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i));
    return ids;
}

} // namespace

TEST_CASE("split sizes match exact ratios") {
    const auto ids = make_ids(10);
    const DatasetSplit split = make_split(ids, {5, 3, 1, 1}, 7);
    CHECK(split.reference.size() == 5);
    CHECK(split.train.size() == 3);
    CHECK(split.calibration.size() == 1);
    CHECK(split.test.size() == 1);
}

TEST_CASE("degenerate ratios put everything into one bucket") {
    const auto ids = make_ids(4);
    const DatasetSplit split = make_split(ids, {1, 0, 0, 0}, 3);
    CHECK(split.reference.size() == 4);
    CHECK(split.train.empty());
    CHECK(split.calibration.empty());
    CHECK(split.test.empty());
}

TEST_CASE("split sizes follow the largest-remainder rule") {
    Rng rng(303);
    for (int round = 0; round < 100; ++round) {
        const std::size_t n = 1 + rng.index(200);
        std::array<double, 4> ratios{};
        for (double& r : ratios) r = static_cast<double>(rng.index(6));
        if (ratios[0] + ratios[1] + ratios[2] + ratios[3] == 0.0) ratios[0] = 1.0;
        const auto got = largest_remainder_sizes(n, ratios);
        const auto want = oracle_sizes(n, ratios);
        CHECK(got == want);
    }
    // The 13-id case spelled out: quotas 6.5, 3.9, 1.3, 1.3.
    CHECK(largest_remainder_sizes(13, {5, 3, 1, 1}) == std::array<std::size_t, 4>{7, 4, 1, 1});
}

TEST_CASE("splits are deterministic, disjoint and exhaustive") {
    Rng rng(404);
    for (int round = 0; round < 20; ++round) {
        const std::size_t n = 4 + rng.index(80);
        const auto ids = make_ids(n);
        const std::uint64_t seed = rng.next();
        const DatasetSplit a = make_split(ids, {5, 3, 1, 1}, seed);
        const DatasetSplit b = make_split(ids, {5, 3, 1, 1}, seed);
        CHECK(a.reference == b.reference);
        CHECK(a.train == b.train);
        CHECK(a.calibration == b.calibration);
        CHECK(a.test == b.test);

        std::set<std::string> all;
        for (const auto* part : {&a.reference, &a.train, &a.calibration, &a.test}) {
            for (const auto& id : *part) CHECK(all.insert(id).second);
        }
        CHECK(all.size() == n);
    }
}

TEST_CASE("duplicate ids are rejected") {
    std::vector<std::string> ids{"a", "b", "a"};
    CHECK_THROWS_AS(make_split(ids, {1, 1, 1, 1}, 0), InvalidInputError);
}

TEST_CASE("scored records round-trip through JSONL") {
    std::vector<ScoredRecord> records{{"x", 1.25, 1}, {"y", 0.5, 0}};
    const std::string text = scored_records_to_jsonl(records, json{{"seed", 7}});
    const JsonlFile parsed = parse_jsonl(text);
    CHECK(parsed.meta.at("seed") == 7);
    const auto back = scored_records_from_jsonl(parsed);
    REQUIRE(back.size() == 2);
    CHECK(back[0].id == "x");
    CHECK(back[0].u == 1.25);
    CHECK(back[1].j == 0);
}

TEST_CASE("record validation rejects bad labels and scores") {
    CHECK_THROWS_AS(validate_record({"a", -1.0, 1}), InvalidInputError);
    CHECK_THROWS_AS(validate_record({"a", 0.5, 2}), InvalidInputError);
    CHECK_THROWS_AS(validate_record({"a", std::nan(""), 0}), InvalidInputError);
}
