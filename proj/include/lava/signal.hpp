#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "lava/error.hpp"
#include "lava/rng.hpp"

namespace lava {

inline constexpr int kDefaultSampleRate = 24000;

/// Mono audio. Amplitudes are nominally in [-1, 1]; only write_wav enforces
/// the range (by clamping), so intermediate signals such as noisy mixtures
/// may exceed it.
struct Waveform {
    std::vector<double> samples;
    int sample_rate_hz = kDefaultSampleRate;

    double duration_s() const noexcept
    {
        return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }

    bool empty() const noexcept { return samples.empty(); }

    friend bool operator==(const Waveform&, const Waveform&) = default;
};

inline void validate(const Waveform& w)
{
    require(w.sample_rate_hz > 0, "sample rate must be positive");
    for (double s : w.samples) {
        require(std::isfinite(s), "waveform contains a non-finite sample");
    }
}

/// Mean square amplitude.
inline double mean_power(std::span<const double> x)
{
    if (x.empty()) {
        return 0.0;
    }
    double acc = 0.0;
    for (double v : x) {
        acc += v * v;
    }
    return acc / static_cast<double>(x.size());
}

namespace detail {

inline std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at)
{
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8)
           | (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

inline std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at)
{
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
    }
}

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v)
{
    out.push_back(static_cast<std::uint8_t>(v & 0xffu));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag)
{
    return std::memcmp(b.data() + at, tag, 4) == 0;
}

} // namespace detail

/// Parses a PCM 16-bit mono RIFF/WAVE container. Chunks other than "fmt "
/// and "data" are skipped. Samples are scaled by 1/32768.
inline Waveform read_wav(std::span<const std::uint8_t> bytes)
{
    using detail::read_u16;
    using detail::read_u32;

    if (bytes.size() < 12 || !detail::tag_is(bytes, 0, "RIFF") || !detail::tag_is(bytes, 8, "WAVE")) {
        fail(ErrorKind::Format, "not a RIFF/WAVE container");
    }

    bool have_fmt = false;
    std::uint32_t rate = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t size = read_u32(bytes, pos + 4);
        const std::size_t body = pos + 8;
        if (size > bytes.size() - body) {
            fail(ErrorKind::Format, "chunk extends past end of file");
        }
        if (detail::tag_is(bytes, pos, "fmt ")) {
            if (size < 16) {
                fail(ErrorKind::Format, "fmt chunk too short");
            }
            const std::uint16_t format = read_u16(bytes, body);
            const std::uint16_t channels = read_u16(bytes, body + 2);
            rate = read_u32(bytes, body + 4);
            const std::uint16_t bits = read_u16(bytes, body + 14);
            if (format != 1) {
                fail(ErrorKind::Unsupported, "only PCM (format 1) is supported");
            }
            if (channels != 1) {
                fail(ErrorKind::Unsupported, "only mono audio is supported, got " + std::to_string(channels) + " channels");
            }
            if (bits != 16) {
                fail(ErrorKind::Unsupported, "only 16-bit samples are supported, got " + std::to_string(bits));
            }
            if (rate == 0 || rate > 0x7fffffffu) {
                fail(ErrorKind::Format, "invalid sample rate");
            }
            have_fmt = true;
        } else if (detail::tag_is(bytes, pos, "data")) {
            if (!have_fmt) {
                fail(ErrorKind::Format, "data chunk precedes fmt chunk");
            }
            if (size % 2 != 0) {
                fail(ErrorKind::Format, "data chunk size is not a whole number of samples");
            }
            Waveform w;
            w.sample_rate_hz = static_cast<int>(rate);
            w.samples.resize(size / 2);
            for (std::size_t i = 0; i < w.samples.size(); ++i) {
                const auto raw = static_cast<std::int16_t>(read_u16(bytes, body + 2 * i));
                w.samples[i] = static_cast<double>(raw) / 32768.0;
            }
            return w;
        }
        pos = body + size + (size & 1u);
    }
    fail(ErrorKind::Format, have_fmt ? "missing data chunk" : "missing fmt chunk");
}

/// Canonical 44-byte-header PCM 16-bit mono WAV. Amplitudes are clamped to
/// [-1, 1], scaled by 32768 and saturated to the int16 range, so values that
/// came out of read_wav are written back bit-exactly.
inline std::vector<std::uint8_t> write_wav(const Waveform& w)
{
    validate(w);
    if (w.samples.empty()) {
        fail(ErrorKind::InvalidArgument, "cannot write zero-length audio");
    }
    const std::uint64_t data_size = 2 * static_cast<std::uint64_t>(w.samples.size());
    if (data_size > 0xffffffffULL - 36) {
        fail(ErrorKind::InvalidArgument, "waveform too long for a RIFF container");
    }
    const auto rate = static_cast<std::uint32_t>(w.sample_rate_hz);

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_size);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    detail::put_u32(out, static_cast<std::uint32_t>(36 + data_size));
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    detail::put_u32(out, 16);
    detail::put_u16(out, 1);
    detail::put_u16(out, 1);
    detail::put_u32(out, rate);
    detail::put_u32(out, rate * 2);
    detail::put_u16(out, 2);
    detail::put_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    detail::put_u32(out, static_cast<std::uint32_t>(data_size));
    for (double s : w.samples) {
        const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
        const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
        detail::put_u16(out, static_cast<std::uint16_t>(v));
    }
    return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::Io, "cannot open " + path);
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorKind::Io, "cannot open " + path + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorKind::Io, "write failed for " + path);
    }
}

inline Waveform read_wav_file(const std::string& path)
{
    const auto bytes = read_file_bytes(path);
    return read_wav(bytes);
}

inline void write_wav_file(const std::string& path, const Waveform& w)
{
    const auto bytes = write_wav(w);
    write_file_bytes(path, bytes);
}

/// signal + g * noise with g chosen so that the mean-square power ratio equals
/// target_snr_db. Noise is truncated to the signal length. The result is not
/// clamped.
inline Waveform mix_at_snr(const Waveform& signal, const Waveform& noise, double target_snr_db)
{
    validate(signal);
    validate(noise);
    require(std::isfinite(target_snr_db), "target SNR must be finite");
    require(signal.sample_rate_hz == noise.sample_rate_hz, "sample rate mismatch");
    require(noise.samples.size() >= signal.samples.size(), "noise shorter than signal");
    require(!signal.samples.empty(), "empty signal");

    const std::span<const double> noise_part(noise.samples.data(), signal.samples.size());
    const double ps = mean_power(signal.samples);
    const double pn = mean_power(noise_part);
    require(ps > 0.0, "signal has zero power");
    require(pn > 0.0, "noise has zero power");

    const double gain = std::sqrt(ps / (pn * std::pow(10.0, target_snr_db / 10.0)));
    Waveform out = signal;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        out.samples[i] += gain * noise_part[i];
    }
    return out;
}

/// Speech-like test signal: Gamma(shape, 1) magnitudes with random signs,
/// peak-normalized to 0.95.
inline Waveform gen_gamma_signal(std::size_t n, double shape, std::uint64_t seed,
                                 int sample_rate_hz = kDefaultSampleRate)
{
    require(n > 0, "sample count must be positive");
    require(shape > 0.0 && std::isfinite(shape), "gamma shape must be positive");
    require(sample_rate_hz > 0, "sample rate must be positive");

    SplitMix64 rng(seed);
    Waveform w;
    w.sample_rate_hz = sample_rate_hz;
    w.samples.resize(n);
    double peak = 0.0;
    for (auto& s : w.samples) {
        const double mag = rng.gamma(shape);
        s = (rng() & 1u) ? mag : -mag;
        peak = std::max(peak, mag);
    }
    if (peak > 0.0) {
        const double k = 0.95 / peak;
        for (auto& s : w.samples) {
            s *= k;
        }
    }
    return w;
}

/// Zero-mean white Gaussian noise with unit variance.
inline Waveform gen_white_noise(std::size_t n, std::uint64_t seed, int sample_rate_hz = kDefaultSampleRate)
{
    SplitMix64 rng(seed);
    Waveform w;
    w.sample_rate_hz = sample_rate_hz;
    w.samples.resize(n);
    for (auto& s : w.samples) {
        s = rng.normal();
    }
    return w;
}

} // namespace lava
