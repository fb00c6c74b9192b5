#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "sparselight/light_tree.hpp"
#include "sparselight/observations.hpp"
#include "sparselight/rng.hpp"

namespace sparselight {

/// clamp(round(k * luminance(I)), min_n, max_n).
std::size_t sample_count(const Color& total_intensity, double k, std::size_t min_n, std::size_t max_n);

/// n distinct rows of [0, slice_rows), uniformly chosen, ascending. All rows
/// when n >= slice_rows.
std::vector<std::uint32_t> pick_pixels(std::size_t slice_rows, std::size_t n, Rng& rng);

/// Infinity norm over rows of luminance(V_b - V_a * lum(I_b) / lum(I_a));
/// max luminance of V_b when lum(I_a) = 0.
double merge_error(std::span<const Color> v_a, std::span<const Color> v_b, const Color& i_a,
                   const Color& i_b);

struct ErrorBound {
    double value = 0.0;  // absolute, in luminance units
};
struct TargetLights {
    std::size_t count = 0;
};
using CoarsenStop = std::variant<ErrorBound, TargetLights>;

struct CoarsenSampling {
    double samples_per_luminance = 1.0;  // k
    std::size_t min_samples = 4;
    std::size_t max_samples = 0;  // 0 = slice size
};

struct MergeRecord {
    std::uint32_t parent = 0;
    std::uint32_t kept = 0;       // child carrying the representative (L_a)
    std::uint32_t discarded = 0;  // L_b
    double error = 0.0;           // epsilon(L_f)
    double cost = 0.0;            // epsilon(L_f) + cost(L_b)
    std::size_t samples = 0;      // |zeta_f|
    bool unioned = false;         // zeta_f = zeta_a U zeta_b
    std::size_t new_evaluations = 0;
};

struct CoarsenResult {
    Cut cut;
    SparseObservations observations;  // columns follow `cut` order
    std::vector<MergeRecord> merges;  // in execution order
};

/// Greedy least-cost merging of sibling pairs of `global_cut` for one slice.
/// Costs follow cost(L_f) = eps(L_f) + cost(L_b) with cost 0 on global-cut
/// nodes. Lighting values come from `cache`; every cached response whose VPL
/// represents a node of the final cut is returned as an observation.
CoarsenResult coarsen_cut(std::size_t slice_rows, const Cut& global_cut, const LightTree& tree,
                          const CoarsenStop& stop, const CoarsenSampling& sampling, Rng& rng,
                          ResponseCache& cache);

/// k such that the brightest sibling-pair parent over the cut gets `samples`.
double samples_per_luminance_for(const LightTree& tree, const Cut& cut, double samples = 16.0);

/// Mean luminance of a slice row (sum over all cut columns), estimated from
/// `probe_rows` uniformly chosen rows. The evaluations land in `cache`.
double estimate_row_luminance(std::size_t slice_rows, const Cut& cut, const LightTree& tree,
                              std::size_t probe_rows, Rng& rng, ResponseCache& cache);

}  // namespace sparselight
