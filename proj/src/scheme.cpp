#include "cfo/scheme.hpp"

#include <cmath>

#include "cfo/analysis.hpp"
#include "cfo/error.hpp"

namespace cfo {

void validate(const TwoStepConfig& cfg) {
    if (!cfg.enable_coarse && !cfg.enable_residual)
        throw Error(ErrorKind::InvalidArgument, "at least one stage must be enabled");
    if (cfg.n_symbols == 0) throw Error(ErrorKind::InvalidArgument, "empty block");
    if (cfg.enable_residual) {
        validate(cfg.pilot_layout, cfg.numerology.n_fft());
        if (cfg.pilot_layout.pilot_symbol_indices.second >= cfg.n_symbols)
            throw Error(ErrorKind::InvalidArgument, "pilot symbols fall outside the block");
    }
}

TwoStepResult run_two_step(const TimeSignal& signal, const TwoStepConfig& cfg, const PilotMap& pilots) {
    validate(cfg);
    validate(signal);
    const auto& num = cfg.numerology;
    if (signal.samples.size() < cfg.n_symbols * num.symbol_len())
        throw Error(ErrorKind::InsufficientSamples, "signal shorter than the configured block");

    TwoStepResult result{std::nullopt, std::nullopt, 0.0, ResourceGrid(num, 0), {}};
    TimeSignal work = signal;

    if (cfg.enable_coarse) {
        const CfoEstimate coarse = estimate_cp(work, num, cfg.n_symbols);
        work = compensate(work, coarse.f_hat_hz);
        result.f_coarse_hz = coarse.f_hat_hz;
        result.f_total_hz += coarse.f_hat_hz;
        result.diagnostics.push_back({"coarse", coarse, false});
    }

    ResourceGrid grid = ofdm_demodulate(work, num, cfg.n_symbols);

    if (cfg.enable_residual) {
        try {
            const CfoEstimate residual = estimate_pilot(grid, cfg.pilot_layout, pilots, num);
            work = compensate(work, residual.f_hat_hz);
            grid = ofdm_demodulate(work, num, cfg.n_symbols);
            result.f_residual_hz = residual.f_hat_hz;
            result.f_total_hz += residual.f_hat_hz;
            result.diagnostics.push_back({"residual", residual, false});
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ZeroCorrelation) throw;
            result.diagnostics.push_back({"residual", std::nullopt, true});
        }
    }

    result.compensated_grid = std::move(grid);
    return result;
}

double predict_final_error_std(const TwoStepConfig& cfg, double raw_snr) {
    if (!cfg.enable_coarse || !cfg.enable_residual)
        throw Error(ErrorKind::StageDisabled, "prediction needs both stages");
    const auto spec = pilot_estimator_spec(cfg.numerology, cfg.pilot_layout);
    const double snr_e = analysis::estimator_effective_snr(EstimatorKind::pilot, raw_snr, spec.n_pairs);
    return std::sqrt(analysis::cfo_variance({snr_e, spec.delta_t_s, 0.0}));
}

double predict_coarse_error_std(const TwoStepConfig& cfg, double raw_snr) {
    const auto spec = cp_estimator_spec(cfg.numerology, cfg.n_symbols);
    const double snr_e = analysis::estimator_effective_snr(EstimatorKind::cp, raw_snr, spec.n_pairs);
    return std::sqrt(analysis::cfo_variance({snr_e, spec.delta_t_s, 0.0}));
}

}  // namespace cfo
