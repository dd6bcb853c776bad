#include "cfo/numerology.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "cfo/error.hpp"
#include "dft.hpp"

namespace cfo {

Numerology::Numerology(double scs_hz, std::size_t n_fft, std::size_t cp_len)
    : scs_hz_(scs_hz), n_fft_(n_fft), cp_len_(cp_len) {
    if (!(std::isfinite(scs_hz) && scs_hz > 0.0))
        throw Error(ErrorKind::InvalidArgument, "subcarrier spacing must be positive");
    if (n_fft < 8 || !std::has_single_bit(n_fft))
        throw Error(ErrorKind::InvalidArgument, "n_fft must be a power of two >= 8");
    if (cp_len >= n_fft) throw Error(ErrorKind::InvalidArgument, "cp_len must be < n_fft");
}

Numerology default_numerology() { return Numerology(15000.0, 128, 9); }

double TimeSignal::mean_power() const {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : samples) acc += std::norm(s);
    return acc / static_cast<double>(samples.size());
}

void validate(const TimeSignal& signal) {
    if (signal.samples.empty()) throw Error(ErrorKind::InvalidArgument, "empty signal");
    if (!(std::isfinite(signal.sample_rate_hz) && signal.sample_rate_hz > 0.0))
        throw Error(ErrorKind::InvalidArgument, "sample rate must be positive");
    for (const auto& s : signal.samples)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw Error(ErrorKind::InvalidArgument, "non-finite sample");
}

ResourceGrid::ResourceGrid(Numerology numerology, std::size_t n_symbols)
    : ResourceGrid(numerology, n_symbols, numerology.n_fft()) {}

ResourceGrid::ResourceGrid(Numerology numerology, std::size_t n_symbols, std::size_t n_subcarriers)
    : numerology_(numerology),
      n_symbols_(n_symbols),
      n_subcarriers_(n_subcarriers),
      data_(n_symbols * n_subcarriers) {
    if (n_subcarriers > numerology.n_fft())
        throw Error(ErrorKind::InvalidArgument, "more subcarriers than DFT bins");
}

cplx& ResourceGrid::at(std::size_t symbol, std::size_t subcarrier) {
    if (symbol >= n_symbols_ || subcarrier >= n_subcarriers_)
        throw Error(ErrorKind::InvalidArgument, "grid index out of range");
    return (*this)(symbol, subcarrier);
}

const cplx& ResourceGrid::at(std::size_t symbol, std::size_t subcarrier) const {
    if (symbol >= n_symbols_ || subcarrier >= n_subcarriers_)
        throw Error(ErrorKind::InvalidArgument, "grid index out of range");
    return (*this)(symbol, subcarrier);
}

bool PilotLayout::is_pilot(std::size_t symbol, std::size_t subcarrier) const {
    if (symbol != pilot_symbol_indices.first && symbol != pilot_symbol_indices.second) return false;
    return std::find(pilot_subcarriers.begin(), pilot_subcarriers.end(), subcarrier) !=
           pilot_subcarriers.end();
}

PilotLayout default_pilot_layout(const Numerology& numerology, std::size_t spacing,
                                 std::uint64_t seed) {
    if (spacing == 0) throw Error(ErrorKind::InvalidArgument, "pilot spacing must be positive");
    PilotLayout layout;
    layout.pilot_symbol_indices = {0, 4};
    for (std::size_t k = 0; k < numerology.n_fft(); k += spacing) layout.pilot_subcarriers.push_back(k);
    layout.seed = seed;
    return layout;
}

void validate(const PilotLayout& layout, std::size_t grid_width) {
    const auto [first, second] = layout.pilot_symbol_indices;
    if (first >= second)
        throw Error(ErrorKind::InvalidArgument, "pilot symbol indices must be distinct and ordered");
    if (layout.pilot_subcarriers.empty())
        throw Error(ErrorKind::InvalidArgument, "pilot layout has no subcarriers");
    std::set<std::size_t> seen;
    for (auto k : layout.pilot_subcarriers) {
        if (k >= grid_width) throw Error(ErrorKind::InvalidArgument, "pilot subcarrier outside grid");
        if (!seen.insert(k).second) throw Error(ErrorKind::InvalidArgument, "duplicate pilot subcarrier");
    }
}

namespace {

// Primitive polynomial exponents, x^m + ... + 1, indexed by order m.
constexpr std::array<std::array<unsigned, 4>, 17> kTaps{{
    {},
    {},
    {2, 1, 0, 0},
    {3, 2, 0, 0},
    {4, 3, 0, 0},
    {5, 3, 0, 0},
    {6, 5, 0, 0},
    {7, 6, 0, 0},
    {8, 6, 5, 4},
    {9, 5, 0, 0},
    {10, 7, 0, 0},
    {11, 9, 0, 0},
    {12, 11, 10, 4},
    {13, 12, 11, 8},
    {14, 13, 12, 2},
    {15, 14, 0, 0},
    {16, 15, 13, 4},
}};

}  // namespace

std::vector<int> m_sequence(unsigned order, std::uint64_t seed) {
    if (order < 2) throw Error(ErrorKind::InvalidArgument, "m-sequence order must be >= 2");
    const std::size_t length = (std::size_t{1} << order) - 1;
    std::vector<int> out(length);

    if (order >= kTaps.size()) {
        std::mt19937_64 rng(seed);
        for (auto& v : out) v = (rng() & 1U) ? -1 : 1;
        return out;
    }

    std::uint32_t state = static_cast<std::uint32_t>(seed % length) + 1;
    for (auto& v : out) {
        v = (state & 1U) ? -1 : 1;
        std::uint32_t bit = 0;
        for (unsigned t : kTaps[order])
            if (t != 0) bit ^= state >> (order - t);
        state = (state >> 1) | ((bit & 1U) << (order - 1));
    }
    return out;
}

TimeSignal make_preamble(const Numerology& numerology, std::uint64_t seed) {
    const std::size_t n = numerology.n_fft();
    const unsigned order = static_cast<unsigned>(std::countr_zero(n)) - 1;
    const auto seq = m_sequence(order, seed);

    // Even bins from -n/2 up to n/2 - 2, DC skipped: exactly 2^order - 1 of them.
    std::vector<cplx> freq(n);
    std::size_t i = 0;
    const auto half = static_cast<std::ptrdiff_t>(n / 2);
    for (std::ptrdiff_t k = -half; k < half; k += 2) {
        if (k == 0) continue;
        const auto bin = static_cast<std::size_t>((k + static_cast<std::ptrdiff_t>(n)) %
                                                  static_cast<std::ptrdiff_t>(n));
        freq[bin] = static_cast<double>(seq[i++]);
    }

    TimeSignal out{std::vector<cplx>(n), numerology.sample_rate_hz()};
    detail::dft_inverse(freq, out.samples);
    const double scale = 1.0 / std::sqrt(out.mean_power());
    for (auto& s : out.samples) s *= scale;
    return out;
}

PilotMap make_pilot_sequence(const PilotLayout& layout) {
    std::mt19937_64 rng(layout.seed);
    PilotMap pilots;
    for (std::size_t symbol : {layout.pilot_symbol_indices.first, layout.pilot_symbol_indices.second}) {
        for (std::size_t k : layout.pilot_subcarriers) {
            const auto bits = rng();
            pilots[{symbol, k}] = qpsk_symbol(static_cast<int>(bits & 1U), static_cast<int>((bits >> 1) & 1U));
        }
    }
    return pilots;
}

TimeSignal ofdm_modulate(const ResourceGrid& grid) {
    const auto& num = grid.numerology();
    const std::size_t n = num.n_fft();
    const std::size_t cp = num.cp_len();
    for (const auto& v : grid.data())
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw Error(ErrorKind::InvalidArgument, "non-finite grid value");

    TimeSignal out{std::vector<cplx>(grid.n_symbols() * (n + cp)), num.sample_rate_hz()};
    std::vector<cplx> freq(n), body(n);
    for (std::size_t s = 0; s < grid.n_symbols(); ++s) {
        std::fill(freq.begin(), freq.end(), cplx{});
        for (std::size_t k = 0; k < grid.n_subcarriers(); ++k) freq[k] = grid(s, k);
        detail::dft_inverse(freq, body);
        auto dst = out.samples.begin() + static_cast<std::ptrdiff_t>(s * (n + cp));
        dst = std::copy(body.end() - static_cast<std::ptrdiff_t>(cp), body.end(), dst);
        std::copy(body.begin(), body.end(), dst);
    }
    return out;
}

ResourceGrid ofdm_demodulate(const TimeSignal& signal, const Numerology& numerology,
                             std::size_t n_symbols) {
    const std::size_t n = numerology.n_fft();
    const std::size_t step = numerology.symbol_len();
    if (signal.samples.size() < n_symbols * step)
        throw Error(ErrorKind::InsufficientSamples,
                    "need " + std::to_string(n_symbols * step) + " samples, have " +
                        std::to_string(signal.samples.size()));

    ResourceGrid grid(numerology, n_symbols);
    std::vector<cplx> freq(n);
    for (std::size_t s = 0; s < n_symbols; ++s) {
        const auto body = std::span<const cplx>(signal.samples).subspan(s * step + numerology.cp_len(), n);
        detail::dft_forward(body, freq);
        for (std::size_t k = 0; k < n; ++k) grid(s, k) = freq[k];
    }
    return grid;
}

}  // namespace cfo
