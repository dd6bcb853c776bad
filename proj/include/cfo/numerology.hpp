#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace cfo {

using cplx = std::complex<double>;

/// OFDM dimensioning. The sample rate is always scs_hz * n_fft, so it is
/// derived rather than stored.
class Numerology {
public:
    /// Throws Error(InvalidArgument) unless n_fft is a power of two >= 8,
    /// 0 <= cp_len < n_fft and scs_hz is positive and finite.
    Numerology(double scs_hz, std::size_t n_fft, std::size_t cp_len);

    double scs_hz() const noexcept { return scs_hz_; }
    std::size_t n_fft() const noexcept { return n_fft_; }
    std::size_t cp_len() const noexcept { return cp_len_; }
    std::size_t symbol_len() const noexcept { return n_fft_ + cp_len_; }
    double sample_rate_hz() const noexcept { return scs_hz_ * static_cast<double>(n_fft_); }
    /// Duration of one OFDM symbol including its cyclic prefix.
    double symbol_duration_s() const noexcept {
        return static_cast<double>(symbol_len()) / sample_rate_hz();
    }

    bool operator==(const Numerology&) const = default;

private:
    double scs_hz_;
    std::size_t n_fft_;
    std::size_t cp_len_;
};

/// 15 kHz / 128-point / 9-sample CP, the default desk-scale configuration.
Numerology default_numerology();

struct TimeSignal {
    std::vector<cplx> samples;
    double sample_rate_hz = 0.0;

    std::size_t size() const noexcept { return samples.size(); }
    /// Mean |x|^2 over all samples.
    double mean_power() const;
};

/// Throws Error(InvalidArgument) if the signal is empty, has a non-positive
/// sample rate or holds a non-finite sample.
void validate(const TimeSignal& signal);

/// Symbol-by-subcarrier grid. Subcarrier k maps to DFT bin k.
class ResourceGrid {
public:
    ResourceGrid(Numerology numerology, std::size_t n_symbols);
    ResourceGrid(Numerology numerology, std::size_t n_symbols, std::size_t n_subcarriers);

    const Numerology& numerology() const noexcept { return numerology_; }
    std::size_t n_symbols() const noexcept { return n_symbols_; }
    std::size_t n_subcarriers() const noexcept { return n_subcarriers_; }

    cplx& at(std::size_t symbol, std::size_t subcarrier);
    const cplx& at(std::size_t symbol, std::size_t subcarrier) const;

    cplx& operator()(std::size_t symbol, std::size_t subcarrier) noexcept {
        return data_[symbol * n_subcarriers_ + subcarrier];
    }
    const cplx& operator()(std::size_t symbol, std::size_t subcarrier) const noexcept {
        return data_[symbol * n_subcarriers_ + subcarrier];
    }

    const std::vector<cplx>& data() const noexcept { return data_; }

private:
    Numerology numerology_;
    std::size_t n_symbols_;
    std::size_t n_subcarriers_;
    std::vector<cplx> data_;
};

struct PilotLayout {
    std::pair<std::size_t, std::size_t> pilot_symbol_indices{0, 4};
    std::vector<std::size_t> pilot_subcarriers;
    std::uint64_t seed = 0;

    /// Distance between the two pilot-bearing symbols, in OFDM symbols.
    std::size_t symbol_spacing() const noexcept {
        return pilot_symbol_indices.second - pilot_symbol_indices.first;
    }
    bool is_pilot(std::size_t symbol, std::size_t subcarrier) const;
};

/// Pilots on symbols (0, 4) every `spacing` subcarriers starting at 0, the
/// stand-in for LTE reference symbols 7 and 11 around the broadcast block.
PilotLayout default_pilot_layout(const Numerology& numerology, std::size_t spacing = 6,
                                 std::uint64_t seed = 0);

/// Throws Error(InvalidArgument) unless the symbol indices are distinct and
/// ordered and the subcarriers are distinct and below `grid_width`.
void validate(const PilotLayout& layout, std::size_t grid_width);

using PilotKey = std::pair<std::size_t, std::size_t>;  // (symbol, subcarrier)
using PilotMap = std::map<PilotKey, cplx>;

/// Maximal-length +/-1 sequence of period 2^order - 1 from a Fibonacci LFSR.
/// `seed` picks the (nonzero) initial register state. Orders above 16 fall
/// back to a seeded pseudo-random +/-1 sequence.
std::vector<int> m_sequence(unsigned order, std::uint64_t seed);

/// Time-domain preamble of n_fft samples with unit mean power. The m-sequence
/// fills every even, non-DC bin, which makes the two time-domain halves equal.
TimeSignal make_preamble(const Numerology& numerology, std::uint64_t seed);

/// Seeded unit-magnitude QPSK values for every pilot position of the layout.
PilotMap make_pilot_sequence(const PilotLayout& layout);

/// Gray-mapped QPSK point (unit magnitude) for a bit pair.
inline cplx qpsk_symbol(int b0, int b1) {
    constexpr double a = 0.70710678118654752440;
    return {b0 ? -a : a, b1 ? -a : a};
}

/// Unitary inverse DFT per symbol, with cp_len tail samples prepended.
TimeSignal ofdm_modulate(const ResourceGrid& grid);

/// Strips the CP of each of `n_symbols` consecutive symbols starting at
/// sample 0 and applies the unitary DFT. Throws InsufficientSamples.
ResourceGrid ofdm_demodulate(const TimeSignal& signal, const Numerology& numerology,
                             std::size_t n_symbols);

}  // namespace cfo
