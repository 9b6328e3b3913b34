#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "confab/errors.hpp"
#include "confab/io.hpp"
#include "confab/rng.hpp"
#include "confab/score.hpp"

namespace confab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Split-conformal threshold: the ceil((1-alpha)(n+1))-th smallest calibration
// score, or +infinity when that rank exceeds n (keep everything).
struct ConformalThreshold {
    double tau = kInf;
    double alpha = 0.0;
    std::size_t n = 0;
};

inline std::size_t conformal_rank(std::size_t n, double alpha) {
    const long double exact = static_cast<long double>(1.0 - alpha) * static_cast<long double>(n + 1);
    const long double ceiled = std::ceil(exact);
    if (ceiled < 1.0L) return 1;
    return static_cast<std::size_t>(ceiled);
}

inline ConformalThreshold compute_threshold(std::span<const double> scores, double alpha) {
    if (scores.empty()) throw InvalidInputError("cannot compute a threshold from zero calibration scores");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInputError("alpha must lie in (0, 1)");
    for (double s : scores) {
        if (!std::isfinite(s)) throw InvalidInputError("calibration scores must be finite");
    }
    ConformalThreshold thr;
    thr.alpha = alpha;
    thr.n = scores.size();
    const std::size_t rank = conformal_rank(thr.n, alpha);
    if (rank > thr.n) {
        thr.tau = kInf;
        return thr;
    }
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    thr.tau = sorted[rank - 1];
    return thr;
}

// Kept region uses <=: a score exactly at the threshold still participates.
inline bool participates(double u, const ConformalThreshold& thr) {
    if (!std::isfinite(u)) throw InvalidInputError("uncertainty score must be finite");
    return u <= thr.tau;
}

// Maximal coverage level of the correct-sample scores below tau.
// k = |{u in U : u <= tau}|, 1-beta = k/(c+1), sigma = k-th smallest of U.
struct BetaResult {
    double one_minus_beta = 0.0;
    double sigma = -kInf;
    std::size_t c = 0;  // number of correct calibration records
    std::size_t k = 0;  // correct-record scores at or below tau
};

inline BetaResult compute_beta(std::span<const double> correct_scores,
                               const ConformalThreshold& thr) {
    BetaResult res;
    res.c = correct_scores.size();
    if (res.c == 0) return res;
    std::vector<double> sorted(correct_scores.begin(), correct_scores.end());
    std::sort(sorted.begin(), sorted.end());
    for (double u : sorted) {
        if (u <= thr.tau) ++res.k;
    }
    res.one_minus_beta = static_cast<double>(res.k) / static_cast<double>(res.c + 1);
    res.sigma = res.k >= 1 ? sorted[res.k - 1] : -kInf;
    return res;
}

// Lower bound on P(correct | participated): (1-beta)/(1-alpha + 1/(n+1)) * c/n.
inline double correctness_bound(std::size_t n, std::size_t c, double alpha,
                                double one_minus_beta) {
    if (n == 0) throw InvalidInputError("calibration size must be positive");
    if (c > n) throw InvalidInputError("correct count cannot exceed calibration size");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInputError("alpha must lie in (0, 1)");
    if (!(one_minus_beta >= 0.0 && one_minus_beta <= 1.0)) {
        throw InvalidInputError("coverage level must lie in [0, 1]");
    }
    const double denom = 1.0 - alpha + 1.0 / static_cast<double>(n + 1);
    return one_minus_beta / denom * (static_cast<double>(c) / static_cast<double>(n));
}

// Aggregated empirical participation and conditional correctness against the
// finite-sample bounds, averaged over random calibration/test resplits.
struct GuaranteeReport {
    double alpha = 0.0;
    std::size_t n = 0;       // calibration size per trial
    std::size_t trials = 0;
    std::size_t degenerate_trials = 0;  // trials whose kept test set was empty
    double c_over_n = 0.0;              // mean calibration accuracy
    double tau_mean = kInf;             // +inf when the rank always exceeds n
    double one_minus_beta_mean = 0.0;
    double participation_bound_low = 0.0;   // 1 - alpha
    double participation_bound_high = 0.0;  // 1 - alpha + 1/(n+1)
    double participation_empirical = 0.0;
    double participation_stderr = 0.0;
    double correctness_bound = 0.0;      // mean per-trial bound
    double correctness_empirical = 0.0;  // mean over non-degenerate trials
    double correctness_stderr = 0.0;
};

namespace detail {

inline double mean_of(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

inline double stderr_of(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double mean = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double var = ss / static_cast<double>(xs.size() - 1);
    return std::sqrt(var / static_cast<double>(xs.size()));
}

// Canonical record order, so the Monte Carlo result depends only on the
// record set and the seed, never on input order (ids are unique, so the
// order is total).
inline std::vector<ScoredRecord> canonical_records(std::span<const ScoredRecord> records) {
    std::vector<ScoredRecord> sorted(records.begin(), records.end());
    std::sort(sorted.begin(), sorted.end(), [](const ScoredRecord& a, const ScoredRecord& b) {
        if (a.u != b.u) return a.u < b.u;
        if (a.j != b.j) return a.j < b.j;
        return a.id < b.id;
    });
    return sorted;
}

} // namespace detail

inline constexpr double kJitterMagnitude = 1e-9;

// Per-trial: shuffle with a stream hashed from (seed, trial index), split into
// calibration/test, compute tau, beta and both bounds, then measure empirical
// participation and conditional correctness on the test half. Trials with an
// empty kept test set are excluded from the conditional mean and counted.
// The optional jitter breaks ties deterministically (the guarantee derivation
// assumes almost-surely distinct scores).
inline GuaranteeReport monte_carlo_coverage(std::span<const ScoredRecord> records, double alpha,
                                            std::size_t trials, double calib_fraction,
                                            std::uint64_t seed, bool jitter = false) {
    if (records.size() < 10) throw InvalidInputError("need at least 10 records for a coverage run");
    if (trials < 1) throw InvalidInputError("need at least one trial");
    if (!(calib_fraction > 0.0 && calib_fraction < 1.0)) {
        throw InvalidInputError("calibration fraction must lie in (0, 1)");
    }
    for (const ScoredRecord& rec : records) validate_record(rec);

    const std::vector<ScoredRecord> canon = detail::canonical_records(records);
    const std::size_t total = canon.size();
    std::size_t n_cal = static_cast<std::size_t>(
        std::llround(calib_fraction * static_cast<double>(total)));
    n_cal = std::min(std::max<std::size_t>(n_cal, 1), total - 1);

    std::vector<double> u_values(total);
    for (std::size_t i = 0; i < total; ++i) u_values[i] = canon[i].u;
    if (jitter) {
        Rng jrng = derive_rng(seed, "mc_jitter");
        for (double& u : u_values) u += kJitterMagnitude * jrng.uniform();
    }

    std::vector<double> part(trials), bound(trials), taus(trials), betas(trials), accs(trials);
    std::vector<double> cond;
    cond.reserve(trials);
    std::size_t degenerate = 0;

    std::vector<std::size_t> idx(total);
    for (std::size_t t = 0; t < trials; ++t) {
        for (std::size_t i = 0; i < total; ++i) idx[i] = i;
        Rng rng = derive_rng(seed, "mc_trial", t);
        rng.shuffle(idx);

        std::vector<double> calib_u;
        std::vector<double> calib_correct_u;
        calib_u.reserve(n_cal);
        for (std::size_t i = 0; i < n_cal; ++i) {
            const std::size_t r = idx[i];
            calib_u.push_back(u_values[r]);
            if (canon[r].j == 1) calib_correct_u.push_back(u_values[r]);
        }
        const ConformalThreshold thr = compute_threshold(calib_u, alpha);
        const BetaResult beta = compute_beta(calib_correct_u, thr);

        std::size_t kept = 0;
        std::size_t kept_correct = 0;
        for (std::size_t i = n_cal; i < total; ++i) {
            const std::size_t r = idx[i];
            if (u_values[r] <= thr.tau) {
                ++kept;
                if (canon[r].j == 1) ++kept_correct;
            }
        }
        const std::size_t n_test = total - n_cal;

        part[t] = static_cast<double>(kept) / static_cast<double>(n_test);
        bound[t] = correctness_bound(n_cal, beta.c, alpha, beta.one_minus_beta);
        taus[t] = thr.tau;
        betas[t] = beta.one_minus_beta;
        accs[t] = static_cast<double>(beta.c) / static_cast<double>(n_cal);
        if (kept == 0) {
            ++degenerate;
        } else {
            cond.push_back(static_cast<double>(kept_correct) / static_cast<double>(kept));
        }
    }

    GuaranteeReport rep;
    rep.alpha = alpha;
    rep.n = n_cal;
    rep.trials = trials;
    rep.degenerate_trials = degenerate;
    rep.c_over_n = detail::mean_of(accs);
    rep.tau_mean = detail::mean_of(taus);
    rep.one_minus_beta_mean = detail::mean_of(betas);
    rep.participation_bound_low = 1.0 - alpha;
    rep.participation_bound_high = 1.0 - alpha + 1.0 / static_cast<double>(n_cal + 1);
    rep.participation_empirical = detail::mean_of(part);
    rep.participation_stderr = detail::stderr_of(part);
    rep.correctness_bound = detail::mean_of(bound);
    rep.correctness_empirical = detail::mean_of(cond);
    rep.correctness_stderr = detail::stderr_of(cond);
    return rep;
}

inline json to_json(const GuaranteeReport& rep) {
    json obj;
    obj["alpha"] = rep.alpha;
    obj["n"] = rep.n;
    obj["c_over_n"] = rep.c_over_n;
    if (std::isfinite(rep.tau_mean)) {
        obj["tau_mean"] = rep.tau_mean;
    } else {
        obj["tau_mean"] = nullptr;  // threshold rank exceeded n in every trial
    }
    obj["one_minus_beta_mean"] = rep.one_minus_beta_mean;
    obj["participation_bound_low"] = rep.participation_bound_low;
    obj["participation_bound_high"] = rep.participation_bound_high;
    obj["participation_empirical"] = rep.participation_empirical;
    obj["participation_stderr"] = rep.participation_stderr;
    obj["correctness_bound"] = rep.correctness_bound;
    obj["correctness_empirical"] = rep.correctness_empirical;
    obj["correctness_stderr"] = rep.correctness_stderr;
    obj["trials"] = rep.trials;
    obj["degenerate_trials"] = rep.degenerate_trials;
    return obj;
}

} // namespace confab
