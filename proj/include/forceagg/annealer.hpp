#pragma once
// Potts spin mean-field annealing.
//
// Two nested loops: sequential per-report sweeps at fixed temperature until
// the mean absolute change drops below `inner_tol`, then geometric cooling
// T <- tau*T until the field saturates, (1/N) sum V_ia^2 >= freeze_tol.
// The local field includes the per-cluster normalization G_a and an optional
// N x K coupling column (template-to-report interactions); without coupling
// this is the standard clustering.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "forceagg/errors.hpp"
#include "forceagg/evidence.hpp"

namespace forceagg {

/// Global inhibition alpha per cluster count; zero where no value is tabulated.
inline double alpha_for_k(std::size_t k) {
    switch (k) {
    case 8: return 1e-6;
    case 10: return 3e-7;
    case 11: return 3e-8;
    default: return 0.0;
    }
}

struct AnnealConfig {
    std::size_t k = 2;
    double epsilon = 0.001;
    double tau = 0.9;
    double gamma = 0.5;
    std::optional<double> alpha; // unset: alpha_for_k(k)
    double inner_tol = 0.01;
    double freeze_tol = 0.99;
    double promote_threshold = 0.99;
    std::uint64_t seed = 1;
    std::size_t max_outer_steps = 500;
    std::size_t max_inner_sweeps = 1000;

    double effective_alpha() const { return alpha.value_or(alpha_for_k(k)); }

    void validate() const {
        if (k < 1)
            throw ValidationError("k must be >= 1");
        if (!(tau > 0.0 && tau < 1.0))
            throw ValidationError("tau must lie in (0, 1)");
        if (!(epsilon >= 0.0))
            throw ValidationError("epsilon must be >= 0");
        for (double t : {inner_tol, freeze_tol, promote_threshold})
            if (!(t > 0.0 && t <= 1.0))
                throw ValidationError("thresholds must lie in (0, 1]");
        if (max_outer_steps < 1 || max_inner_sweeps < 1)
            throw ValidationError("iteration bounds must be >= 1");
    }
};

struct TemperatureEstimate {
    double t_c = 0.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

inline constexpr double kMinTemperature = 1e-6;
inline constexpr double kMinNormalization = 1e-6;

/// T_c = (1/K) max(-lambda_min, lambda_max) of M = J + alpha - gamma I.
inline TemperatureEstimate critical_temperature(const ConflictMatrix& j, double alpha, double gamma, std::size_t k) {
    const auto n = static_cast<Eigen::Index>(j.size());
    if (n == 0)
        throw ValidationError("critical temperature needs at least one report");
    Eigen::MatrixXd m = j.matrix().array() + alpha;
    m.diagonal().array() -= gamma;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigenvalue solve failed");
    const auto& ev = solver.eigenvalues(); // ascending
    TemperatureEstimate est;
    est.lambda_min = ev(0);
    est.lambda_max = ev(n - 1);
    est.t_c = std::max(-est.lambda_min, est.lambda_max) / static_cast<double>(k);
    if (!(est.t_c > 0.0))
        est.t_c = kMinTemperature;
    return est;
}

/// Uniform [0,1) draws from a seeded 64-bit Mersenne twister. The mapping
/// from raw bits is fixed here so that runs are reproducible across
/// standard library implementations.
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed) : gen_(seed) {}
    double next() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    std::uint64_t next_bits() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

using ClampMap = std::vector<std::optional<std::size_t>>;

struct SpinField {
    Eigen::MatrixXd v; // N x K
    ClampMap clamp;    // per report: core cluster, if any

    std::size_t n() const noexcept { return static_cast<std::size_t>(v.rows()); }
    std::size_t k() const noexcept { return static_cast<std::size_t>(v.cols()); }
    bool clamped(std::size_t i) const { return clamp[i].has_value(); }

    void clamp_row(std::size_t i, std::size_t a) {
        clamp[i] = a;
        v.row(static_cast<Eigen::Index>(i)).setZero();
        v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = 1.0;
    }
};

namespace detail {

inline void fill_noisy_uniform(SpinField& f, std::size_t i, double epsilon, NoiseSource& noise) {
    const auto k = static_cast<Eigen::Index>(f.k());
    auto row = f.v.row(static_cast<Eigen::Index>(i));
    for (Eigen::Index a = 0; a < k; ++a)
        row(a) = 1.0 / static_cast<double>(k) + epsilon * noise.next();
    row /= row.sum();
}

} // namespace detail

/// Unclamped rows: 1/K + epsilon*U[0,1), row-renormalized. Clamped rows: one-hot.
inline SpinField init_spin_field(std::size_t n, const AnnealConfig& config, const ClampMap& clamps,
                                 NoiseSource& noise) {
    if (!clamps.empty() && clamps.size() != n)
        throw ValidationError("clamp map size does not match report count");
    SpinField f;
    f.v = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(config.k));
    f.clamp = clamps.empty() ? ClampMap(n) : clamps;
    for (std::size_t i = 0; i < n; ++i) {
        if (f.clamp[i]) {
            if (*f.clamp[i] >= config.k)
                throw ValidationError("clamp names cluster " + std::to_string(*f.clamp[i]) + " >= k");
            f.clamp_row(i, *f.clamp[i]);
        } else {
            detail::fill_noisy_uniform(f, i, config.epsilon, noise);
        }
    }
    return f;
}

/// G_a = (K/N) sum_i V_ia, floored at kMinNormalization.
inline Eigen::VectorXd normalization(const SpinField& f) {
    const double scale = static_cast<double>(f.k()) / static_cast<double>(f.n());
    Eigen::VectorXd g = (f.v.colwise().sum().transpose() * scale).eval();
    for (Eigen::Index a = 0; a < g.size(); ++a)
        g(a) = std::max(g(a), kMinNormalization);
    return g;
}

/// H_ia = [sum_j (J_ij + alpha) V_ja + C_ia + alpha - gamma V_ia] / G_a.
/// `coupling` is N x K or empty (no template interactions).
inline Eigen::VectorXd local_field(const SpinField& f, const ConflictMatrix& j, const Eigen::MatrixXd& coupling,
                                   std::size_t i, const Eigen::VectorXd& g, double alpha, double gamma) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto k = static_cast<Eigen::Index>(f.k());
    // sum_j (J_ij + alpha) V_ja = (J_i . V)_a + alpha * colsum_a
    Eigen::VectorXd h = (j.matrix().row(ii) * f.v).transpose();
    if (alpha != 0.0)
        h += alpha * f.v.colwise().sum().transpose();
    for (Eigen::Index a = 0; a < k; ++a) {
        double c = coupling.size() ? coupling(ii, a) : 0.0;
        h(a) = (h(a) + c + alpha - gamma * f.v(ii, a)) / g(a);
    }
    return h;
}

/// Softmax of -H/T (max-subtracted) plus epsilon noise, renormalized.
inline Eigen::RowVectorXd mean_field_update(const Eigen::VectorXd& h, double t, double epsilon, NoiseSource& noise) {
    const auto k = h.size();
    Eigen::RowVectorXd row(k);
    double top = -h(0) / t;
    for (Eigen::Index a = 1; a < k; ++a)
        top = std::max(top, -h(a) / t);
    double z = 0.0;
    for (Eigen::Index a = 0; a < k; ++a) {
        row(a) = std::exp(-h(a) / t - top);
        z += row(a);
    }
    row /= z;
    for (Eigen::Index a = 0; a < k; ++a)
        row(a) += epsilon * noise.next();
    row /= row.sum();
    return row;
}

inline double saturation(const SpinField& f) {
    return f.v.squaredNorm() / static_cast<double>(f.n());
}

/// Row argmax; ties go to the lowest cluster index.
inline HardAssignment harden(const SpinField& f) {
    HardAssignment h;
    h.k = f.k();
    h.cluster_of.resize(f.n());
    for (std::size_t i = 0; i < f.n(); ++i) {
        Eigen::Index best = 0;
        f.v.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
        h.cluster_of[i] = static_cast<std::size_t>(best);
    }
    return h;
}

struct TraceRecord {
    std::size_t outer_step = 0;
    double temperature = 0.0;
    double energy = 0.0;
    double saturation = 0.0;
    std::size_t sweeps = 0;
    bool restarted = false;
};

struct AnnealResult {
    HardAssignment assignment;
    SpinField field;
    std::vector<TraceRecord> trace;
    TemperatureEstimate temperature;
    bool converged = false;
};

/// What to do after a sweep.
enum class SweepAction { proceed, restart };

/// Runs the cooling schedule from an initialized field. `after_sweep(field,
/// outer_step)` runs after every sweep and may clamp rows or mutate the
/// coupling matrix (held by reference); returning `restart` re-initializes
/// the unclamped rows and resets the temperature to T_c.
template <class AfterSweep>
AnnealResult run_schedule(const ConflictMatrix& j, const AnnealConfig& config, SpinField field,
                          const Eigen::MatrixXd& coupling, NoiseSource& noise, AfterSweep&& after_sweep) {
    config.validate();
    const std::size_t n = field.n();
    if (n == 0)
        throw ValidationError("anneal needs at least one report");
    if (j.size() != n)
        throw ValidationError("conflict matrix size does not match spin field");
    if (coupling.size() && (static_cast<std::size_t>(coupling.rows()) != n ||
                            static_cast<std::size_t>(coupling.cols()) != config.k))
        throw ValidationError("coupling must be N x K");

    const double alpha = config.effective_alpha();
    AnnealResult result;
    result.temperature = critical_temperature(j, alpha, config.gamma, config.k);
    double t = result.temperature.t_c;

    for (std::size_t outer = 1; outer <= config.max_outer_steps; ++outer) {
        bool restarted = false;
        std::size_t sweeps = 0;
        while (sweeps < config.max_inner_sweeps) {
            const Eigen::MatrixXd previous = field.v;
            const Eigen::VectorXd g = normalization(field);
            for (std::size_t i = 0; i < n; ++i) {
                if (field.clamped(i))
                    continue;
                const Eigen::VectorXd h = local_field(field, j, coupling, i, g, alpha, config.gamma);
                field.v.row(static_cast<Eigen::Index>(i)) = mean_field_update(h, t, config.epsilon, noise);
            }
            ++sweeps;
            if (after_sweep(field, outer) == SweepAction::restart) {
                for (std::size_t i = 0; i < n; ++i)
                    if (!field.clamped(i))
                        detail::fill_noisy_uniform(field, i, config.epsilon, noise);
                restarted = true;
                break;
            }
            const double delta = (field.v - previous).cwiseAbs().sum() / static_cast<double>(n);
            if (delta <= config.inner_tol)
                break;
        }
        const double sat = saturation(field);
        result.trace.push_back({outer, t, energy(harden(field), j), sat, sweeps, restarted});
        if (restarted) {
            t = result.temperature.t_c;
            continue;
        }
        if (sat >= config.freeze_tol) {
            result.converged = true;
            break;
        }
        t *= config.tau;
    }
    result.assignment = harden(field);
    result.field = std::move(field);
    return result;
}

/// Standard clustering: optional core clamps and optional N x K coupling.
inline AnnealResult anneal(const ConflictMatrix& j, const AnnealConfig& config, const ClampMap& clamps = {},
                           const Eigen::MatrixXd& coupling = Eigen::MatrixXd()) {
    config.validate();
    const bool any_clamp = std::any_of(clamps.begin(), clamps.end(), [](const auto& c) { return c.has_value(); });
    if (!any_clamp && j.size() < config.k)
        throw ValidationError("need N >= K reports when no rows are clamped");
    NoiseSource noise(config.seed);
    SpinField field = init_spin_field(j.size(), config, clamps, noise);
    return run_schedule(j, config, std::move(field), coupling, noise,
                        [](SpinField&, std::size_t) { return SweepAction::proceed; });
}

inline AnnealResult anneal(std::span<const Report> reports, const AnnealConfig& config, const ClampMap& clamps = {},
                           const Eigen::MatrixXd& coupling = Eigen::MatrixXd()) {
    return anneal(build_conflict_matrix(reports), config, clamps, coupling);
}

} // namespace forceagg
