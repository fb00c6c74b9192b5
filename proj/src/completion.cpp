#include "sparselight/completion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sparselight {

std::vector<double> light_importances(const SparseObservations& obs) {
    const std::size_t n = obs.cols();
    std::vector<double> lo(n, std::numeric_limits<double>::infinity());
    std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
    for (const auto& e : obs.entries()) {
        const double l = luminance(e.value);
        lo[e.col] = std::min(lo[e.col], l);
        hi[e.col] = std::max(hi[e.col], l);
    }
    std::vector<double> g(n, 0.0);
    double sum = 0.0;
    std::size_t observed = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (hi[j] < lo[j]) continue;
        g[j] = hi[j] - lo[j];
        sum += g[j];
        ++observed;
    }
    const double mean = observed ? sum / static_cast<double>(observed) : 0.0;
    for (std::size_t j = 0; j < n; ++j)
        if (hi[j] < lo[j]) g[j] = mean;
    return g;
}

double light_importance(const SparseObservations& obs, std::uint32_t j) {
    if (j >= obs.cols()) throw std::out_of_range("column out of range");
    return light_importances(obs)[j];
}

Pdf build_pdf(const SparseObservations& obs, double floor) {
    if (obs.rows() == 0 || obs.cols() == 0) throw std::invalid_argument("build_pdf: empty matrix");
    if (!(floor >= 0.0)) throw std::invalid_argument("build_pdf: negative floor");
    Pdf pdf;
    pdf.rows = obs.rows();
    pdf.column_weight = light_importances(obs);
    double sum = std::accumulate(pdf.column_weight.begin(), pdf.column_weight.end(), 0.0);
    if (!(sum > 0.0)) {
        std::fill(pdf.column_weight.begin(), pdf.column_weight.end(), 1.0);
    } else {
        const double shift = floor * sum / static_cast<double>(obs.cols());
        for (auto& g : pdf.column_weight) g += shift;
    }
    sum = std::accumulate(pdf.column_weight.begin(), pdf.column_weight.end(), 0.0);
    pdf.normalization = sum * static_cast<double>(obs.rows());
    return pdf;
}

SparseObservations sample_entries(SparseObservations obs, double rate, const Pdf& pdf, Rng& rng,
                                  const EntryFn& entry, SamplingStats* stats) {
    if (!(rate > 0.0 && rate <= 1.0)) throw std::invalid_argument("sampling rate must be in (0, 1]");
    const std::size_t m = obs.rows(), n = obs.cols();
    if (pdf.column_weight.size() != n || pdf.rows != m) throw std::invalid_argument("pdf does not match observations");
    const std::size_t total = m * n;
    const std::size_t target =
        std::min(total, static_cast<std::size_t>(std::ceil(rate * static_cast<double>(total) - 1e-9)));
    SamplingStats local;
    local.column_draws.assign(n, 0);
    if (obs.size() >= target) {
        if (stats) *stats = std::move(local);
        return obs;
    }

    std::vector<double> cdf(n);
    std::partial_sum(pdf.column_weight.begin(), pdf.column_weight.end(), cdf.begin());
    const double mass = cdf.back();
    const std::size_t budget = 10 * (target - obs.size());
    while (obs.size() < target && local.draws < budget) {
        ++local.draws;
        const double u = rng.uniform() * mass;
        auto j = static_cast<std::uint32_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (j >= n) j = static_cast<std::uint32_t>(n - 1);
        while (pdf.column_weight[j] == 0.0 && j > 0) --j;  // only hit by rounding at the top
        const auto i = static_cast<std::uint32_t>(rng.below(m));
        ++local.column_draws[j];
        if (obs.contains(i, j)) {
            ++local.duplicates;
            continue;
        }
        obs.add(i, j, entry(i, j));
    }
    if (obs.size() < target) {
        std::vector<std::uint64_t> free;
        free.reserve(total - obs.size());
        for (std::uint32_t i = 0; i < m; ++i)
            for (std::uint32_t j = 0; j < n; ++j)
                if (!obs.contains(i, j)) free.push_back(std::uint64_t{i} * n + j);
        // Partial Fisher-Yates: only as many picks as needed.
        for (std::size_t k = 0; obs.size() < target; ++k) {
            std::swap(free[k], free[k + rng.below(free.size() - k)]);
            const auto i = static_cast<std::uint32_t>(free[k] / n);
            const auto j = static_cast<std::uint32_t>(free[k] % n);
            obs.add(i, j, entry(i, j));
            ++local.filled;
        }
    }
    if (stats) *stats = std::move(local);
    return obs;
}

std::size_t ensure_coverage(SparseObservations& obs, Rng& rng, const EntryFn& entry, bool rows_too) {
    std::size_t added = 0;
    if (obs.rows() == 0 || obs.cols() == 0) return 0;
    const auto cols = obs.column_counts();
    for (std::uint32_t j = 0; j < obs.cols(); ++j) {
        if (cols[j] != 0) continue;
        const auto i = static_cast<std::uint32_t>(rng.below(obs.rows()));
        obs.add(i, j, entry(i, j));
        ++added;
    }
    if (rows_too) {
        const auto rows = obs.row_counts();
        for (std::uint32_t i = 0; i < obs.rows(); ++i) {
            if (rows[i] != 0) continue;
            const auto j = static_cast<std::uint32_t>(rng.below(obs.cols()));
            obs.add(i, j, entry(i, j));
            ++added;
        }
    }
    return added;
}

void AdmmParams::validate() const {
    if (rank < 1) throw std::invalid_argument("rank must be at least 1");
    if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("alpha and beta must be positive");
    if (!(gamma > 0.0 && gamma < 1.618)) throw std::invalid_argument("gamma must lie in (0, 1.618)");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
    if (!(tol >= 0.0)) throw std::invalid_argument("tol must be non-negative");
}

namespace {

double observed_residual(std::span<const ScalarEntry> entries, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         double scale) {
    double num = 0.0;
    for (const auto& e : entries) {
        const double d = x.row(e.row).dot(y.col(e.col)) - e.value * scale;
        num += d * d;
    }
    return std::sqrt(num);
}

}  // namespace

FactorPair admm_nmf(std::size_t m, std::size_t n, std::span<const ScalarEntry> entries, const AdmmParams& params,
                    AdmmTrace* trace) {
    params.validate();
    const auto q = static_cast<std::size_t>(params.rank);
    if (q > std::min(m, n)) throw FactorizationError("rank exceeds dimensions");
    if (entries.empty()) throw std::invalid_argument("admm_nmf: no observations");
    const Eigen::Index qi = params.rank;

    double peak = 0.0;
    for (const auto& e : entries) {
        if (e.row >= m || e.col >= n) throw std::out_of_range("admm_nmf: entry out of range");
        if (!std::isfinite(e.value) || e.value < 0.0) throw std::invalid_argument("admm_nmf: bad value");
        peak = std::max(peak, e.value);
    }
    FactorPair out{Eigen::MatrixXd::Zero(m, qi), Eigen::MatrixXd::Zero(qi, n)};
    if (peak == 0.0) {
        if (trace) trace->iterations = 0;
        return out;
    }
    // Scale the data to unit RMS over the known entries so alpha and beta
    // weigh the same against the data in every slice. Max-scaling lets a
    // single near-field spike shrink everything else towards zero.
    double sq = 0.0;
    for (const auto& e : entries) sq += e.value * e.value;
    const double scale = std::sqrt(sq / static_cast<double>(entries.size()));
    const double inv = 1.0 / scale;
    const double data_norm = std::sqrt(static_cast<double>(entries.size()));

    Rng rng(params.seed, 0x4e4d46);
    Eigen::MatrixXd x(m, qi), y(qi, n);
    for (std::size_t i = 0; i < m; ++i)
        for (Eigen::Index k = 0; k < qi; ++k) x(i, k) = rng.uniform();
    for (Eigen::Index k = 0; k < qi; ++k)
        for (std::size_t j = 0; j < n; ++j) y(k, j) = rng.uniform();
    Eigen::MatrixXd u = x, v = y;
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(m, n);
    for (const auto& e : entries) z(e.row, e.col) = e.value * inv;
    Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(m, qi), pi = Eigen::MatrixXd::Zero(qi, n);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(qi, qi);

    const double a = params.alpha, b = params.beta, g = params.gamma;
    double previous = std::numeric_limits<double>::infinity();
    int it = 0;
    while (it < params.max_iter) {
        ++it;
        const Eigen::MatrixXd gy = y * y.transpose() + a * eye;
        x = gy.llt().solve((y * z.transpose() + a * u.transpose() - lambda.transpose())).transpose();
        const Eigen::MatrixXd gx = x.transpose() * x + b * eye;
        y = gx.llt().solve(x.transpose() * z + b * v - pi);
        z.noalias() = x * y;
        for (const auto& e : entries) z(e.row, e.col) = e.value * inv;
        u = (x + lambda / a).cwiseMax(0.0);
        v = (y + pi / b).cwiseMax(0.0);
        lambda += (g * a) * (x - u);
        pi += (g * b) * (y - v);

        if (!x.allFinite() || !y.allFinite() || !lambda.allFinite() || !pi.allFinite())
            throw FactorizationError("diverged");
        const double residual = observed_residual(entries, u, v, inv) / data_norm;
        if (trace) {
            trace->residual.push_back(residual);
            trace->primal.push_back(((x - u).norm() + (y - v).norm()) / data_norm);
            if (trace->observer) trace->observer(AdmmState{it, x, y, z, u, v, inv});
        }
        if (!std::isfinite(residual)) throw FactorizationError("diverged");
        const double change = std::abs(previous - residual) / std::max(residual, 1e-300);
        previous = residual;
        if (change < params.tol || residual < 1e-13) break;  // second test: converged to round-off
    }
    if (trace) trace->iterations = it;
    out.x = u * scale;
    out.y = std::move(v);
    return out;
}

std::vector<ScalarEntry> channel_entries(const SparseObservations& obs, int channel) {
    std::vector<ScalarEntry> out;
    out.reserve(obs.size());
    for (const auto& e : obs.entries()) out.push_back({e.row, e.col, e.value[channel]});
    return out;
}

ColorFactors admm_nmf(const SparseObservations& obs, const AdmmParams& params) {
    ColorFactors f;
    for (int c = 0; c < 3; ++c) {
        AdmmTrace trace;
        const auto entries = channel_entries(obs, c);
        f.channel[c] = admm_nmf(obs.rows(), obs.cols(), entries, params, &trace);
        f.iterations = std::max(f.iterations, trace.iterations);
    }
    return f;
}

double completion_residual(std::span<const ScalarEntry> entries, const FactorPair& factors) {
    double num = 0.0, den = 0.0;
    for (const auto& e : entries) {
        const double d = factors.x.row(e.row).dot(factors.y.col(e.col)) - e.value;
        num += d * d;
        den += e.value * e.value;
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

double completion_residual(const SparseObservations& obs, const ColorFactors& factors) {
    double num = 0.0, den = 0.0;
    for (const auto& e : obs.entries())
        for (int c = 0; c < 3; ++c) {
            const auto& f = factors.channel[c];
            const double d = f.x.row(e.row).dot(f.y.col(e.col)) - e.value[c];
            num += d * d;
            den += e.value[c] * e.value[c];
        }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

}  // namespace sparselight
