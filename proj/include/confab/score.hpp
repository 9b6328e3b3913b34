#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "confab/errors.hpp"
#include "confab/io.hpp"
#include "confab/rng.hpp"

namespace confab {

// One scored response: uncertainty score u (higher = less reliable) and
// correctness label j (1 = correct). The atom of conformal calibration.
struct ScoredRecord {
    std::string id;
    double u = 0.0;
    int j = 0;
};

inline void validate_record(const ScoredRecord& rec) {
    if (!std::isfinite(rec.u) || rec.u < 0.0) {
        throw InvalidInputError("record '" + rec.id + "': uncertainty score must be finite and nonnegative");
    }
    if (rec.j != 0 && rec.j != 1) {
        throw InvalidInputError("record '" + rec.id + "': correctness label must be 0 or 1");
    }
}

// Per-token probabilities of the generated tokens, p(y[t] | x, y[<t]).
struct TokenConfidenceSequence {
    std::vector<double> probs;
};

inline constexpr double kProbabilityFloor = 1e-12;

// Perplexity of a token-probability sequence: exp(-(1/N) * sum log p_t).
// Probabilities are clamped into [1e-12, 1] before the log so degenerate
// inputs still produce a finite score.
inline double perplexity_score(const TokenConfidenceSequence& seq) {
    if (seq.probs.empty()) throw InvalidInputError("perplexity of an empty sequence is undefined");
    double log_sum = 0.0;
    for (double p : seq.probs) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
            throw InvalidInputError("token probabilities must lie in [0, 1]");
        }
        log_sum += std::log(std::max(p, kProbabilityFloor));
    }
    return std::exp(-log_sum / static_cast<double>(seq.probs.size()));
}

// Disjoint id sets covering a corpus; named after their role in calibration.
struct DatasetSplit {
    std::vector<std::string> reference;
    std::vector<std::string> train;
    std::vector<std::string> calibration;
    std::vector<std::string> test;

    std::size_t total() const {
        return reference.size() + train.size() + calibration.size() + test.size();
    }
};

// Largest-remainder apportionment of n items to the given ratios.
// Remainder ties go to the lower bucket index.
inline std::array<std::size_t, 4> largest_remainder_sizes(std::size_t n,
                                                          const std::array<double, 4>& ratios) {
    double total = 0.0;
    for (double r : ratios) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidInputError("split ratios must be nonnegative");
        total += r;
    }
    if (total <= 0.0) throw InvalidInputError("split ratios must sum to a positive value");

    std::array<std::size_t, 4> sizes{};
    std::array<double, 4> remainders{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double exact = static_cast<double>(n) * ratios[i] / total;
        sizes[i] = static_cast<std::size_t>(std::floor(exact));
        remainders[i] = exact - std::floor(exact);
        assigned += sizes[i];
    }
    std::array<std::size_t, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::size_t k = 0; assigned < n; ++k) {
        ++sizes[order[k % 4]];
        ++assigned;
    }
    return sizes;
}

// Seeded shuffle followed by contiguous slicing with largest-remainder sizing.
// Deterministic for a fixed seed.
inline DatasetSplit make_split(std::span<const std::string> ids,
                               const std::array<double, 4>& ratios, std::uint64_t seed) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(ids.size());
    for (const std::string& id : ids) {
        if (!seen.insert(id).second) throw InvalidInputError("duplicate id in split input: " + id);
    }

    std::vector<std::string> shuffled(ids.begin(), ids.end());
    Rng rng = derive_rng(seed, "dataset_split");
    rng.shuffle(shuffled);

    const auto sizes = largest_remainder_sizes(shuffled.size(), ratios);
    DatasetSplit split;
    auto it = shuffled.begin();
    auto take = [&](std::vector<std::string>& dst, std::size_t count) {
        dst.assign(it, it + static_cast<std::ptrdiff_t>(count));
        it += static_cast<std::ptrdiff_t>(count);
    };
    take(split.reference, sizes[0]);
    take(split.train, sizes[1]);
    take(split.calibration, sizes[2]);
    take(split.test, sizes[3]);
    return split;
}

// --- JSONL interop ---------------------------------------------------------
// Scored record:    {"id": string, "u": number, "j": 0|1}
// Token confidence: {"id": string, "probs": [number, ...]}

inline json to_json(const ScoredRecord& rec) {
    return json{{"id", rec.id}, {"u", rec.u}, {"j", rec.j}};
}

inline ScoredRecord scored_record_from_json(const json& obj) {
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("u") || !obj.contains("j")) {
        throw InvalidInputError("scored record must have id, u and j fields");
    }
    ScoredRecord rec{obj.at("id").get<std::string>(), obj.at("u").get<double>(),
                     obj.at("j").get<int>()};
    validate_record(rec);
    return rec;
}

inline std::vector<ScoredRecord> scored_records_from_jsonl(const JsonlFile& file) {
    std::vector<ScoredRecord> records;
    records.reserve(file.records.size());
    for (const json& obj : file.records) records.push_back(scored_record_from_json(obj));
    return records;
}

inline std::string scored_records_to_jsonl(std::span<const ScoredRecord> records,
                                           const json& meta = json()) {
    std::vector<json> rows;
    rows.reserve(records.size());
    for (const ScoredRecord& rec : records) rows.push_back(to_json(rec));
    return dump_jsonl(rows, meta);
}

inline json split_to_json(const DatasetSplit& split) {
    return json{{"reference", split.reference},
                {"train", split.train},
                {"calibration", split.calibration},
                {"test", split.test}};
}

inline DatasetSplit split_from_json(const json& obj) {
    DatasetSplit split;
    split.reference = obj.at("reference").get<std::vector<std::string>>();
    split.train = obj.at("train").get<std::vector<std::string>>();
    split.calibration = obj.at("calibration").get<std::vector<std::string>>();
    split.test = obj.at("test").get<std::vector<std::string>>();
    return split;
}

} // namespace confab
