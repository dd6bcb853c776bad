#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cfo/estimators.hpp"
#include "cfo/numerology.hpp"

namespace cfo {

struct TwoStepConfig {
    Numerology numerology = default_numerology();
    PilotLayout pilot_layout = default_pilot_layout(default_numerology());
    /// OFDM symbols in the processed block, counted from sample 0.
    std::size_t n_symbols = 5;
    bool enable_coarse = true;
    bool enable_residual = true;
};

/// Throws InvalidArgument if the pilots fall outside the block or both stages
/// are disabled.
void validate(const TwoStepConfig& cfg);

struct StageRecord {
    std::string stage;  // "coarse" or "residual"
    std::optional<CfoEstimate> estimate;
    /// Set when the stage ran but produced no usable correlation.
    bool skipped = false;
};

struct TwoStepResult {
    std::optional<double> f_coarse_hz;
    std::optional<double> f_residual_hz;
    double f_total_hz = 0.0;
    ResourceGrid compensated_grid;
    std::vector<StageRecord> diagnostics;
};

/// Coarse CP-based estimate and time-domain compensation, then demodulation,
/// then the pilot-based residual estimate, compensation of the time signal and
/// a fresh demodulation. Symbol timing is assumed known (boundary at sample 0).
TwoStepResult run_two_step(const TimeSignal& signal, const TwoStepConfig& cfg, const PilotMap& pilots);

/// Standard deviation of the final offset error predicted from the residual
/// stage alone, valid while the coarse error stays well inside the residual
/// range. Throws StageDisabled unless both stages are enabled.
double predict_final_error_std(const TwoStepConfig& cfg, double raw_snr);

/// Model standard deviation of the coarse stage on its own.
double predict_coarse_error_std(const TwoStepConfig& cfg, double raw_snr);

}  // namespace cfo
