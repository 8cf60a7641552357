#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "lava/error.hpp"
#include "lava/signal.hpp"

namespace lava {

/// Energy VAD parameters. The threshold is relative to a noise floor
/// estimated from the leading frames; the floor is capped at
/// max_noise_floor_dbfs so a recording that starts mid-speech still gates.
struct EndpointConfig {
    double frame_ms = 30.0;
    double energy_threshold_db = 10.0;
    double silence_window_s = 1.5;
    std::size_t noise_floor_frames = 10;
    double max_noise_floor_dbfs = -50.0;

    friend bool operator==(const EndpointConfig&, const EndpointConfig&) = default;
};

inline void validate(const EndpointConfig& cfg)
{
    require(std::isfinite(cfg.frame_ms) && cfg.frame_ms > 0.0, "frame_ms must be positive");
    require(std::isfinite(cfg.silence_window_s) && cfg.silence_window_s > 0.0, "silence_window_s must be positive");
    require(cfg.noise_floor_frames >= 1, "noise_floor_frames must be at least 1");
    require(std::isfinite(cfg.energy_threshold_db), "energy_threshold_db must be finite");
    require(std::isfinite(cfg.max_noise_floor_dbfs), "max_noise_floor_dbfs must be finite");
}

inline std::size_t frame_length(const EndpointConfig& cfg, int sample_rate_hz)
{
    const auto n = static_cast<std::size_t>(std::llround(cfg.frame_ms * sample_rate_hz / 1000.0));
    require(n >= 1, "frame_ms is shorter than one sample");
    return n;
}

/// Number of consecutive silent frames that completes the window.
inline std::size_t silence_frames_needed(const EndpointConfig& cfg, double frame_s)
{
    const double ratio = cfg.silence_window_s / frame_s;
    return static_cast<std::size_t>(std::max(1.0, std::ceil(ratio - 1e-9)));
}

enum class VoiceLabel : unsigned char { Silence, Speech };

/// Per-frame labels plus the framing needed to map them back to time.
struct FrameLabels {
    std::vector<VoiceLabel> labels;
    std::size_t frame_len = 0;
    std::size_t n_samples = 0;
    int sample_rate_hz = kDefaultSampleRate;

    double frame_s() const noexcept { return static_cast<double>(frame_len) / sample_rate_hz; }

    double frame_end_s(std::size_t i) const noexcept
    {
        return static_cast<double>(std::min((i + 1) * frame_len, n_samples)) / sample_rate_hz;
    }

    std::size_t speech_count() const noexcept
    {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), VoiceLabel::Speech));
    }
};

inline double rms_dbfs(std::span<const double> frame)
{
    const double rms = std::sqrt(mean_power(frame));
    return 20.0 * std::log10(std::max(rms, 1e-10));
}

/// Tracks consecutive silence after speech and reports the first completed
/// silence window.
class EndpointTracker {
public:
    EndpointTracker(std::size_t needed, double frame_s) : needed_(needed), frame_s_(frame_s) {}

    /// Feed the label of the next frame, which ends at `end_s`. Returns the
    /// endpoint once the window completes; later calls keep returning it.
    std::optional<double> push(VoiceLabel label, double end_s)
    {
        if (endpoint_) {
            return endpoint_;
        }
        if (label == VoiceLabel::Speech) {
            last_speech_end_s_ = end_s;
            silent_run_ = 0;
            return std::nullopt;
        }
        if (last_speech_end_s_) {
            if (++silent_run_ >= needed_) {
                endpoint_ = *last_speech_end_s_ + static_cast<double>(needed_) * frame_s_;
            }
        }
        return endpoint_;
    }

    std::optional<double> endpoint() const noexcept { return endpoint_; }
    std::optional<double> last_speech_end_s() const noexcept { return last_speech_end_s_; }

private:
    std::size_t needed_;
    double frame_s_;
    std::size_t silent_run_ = 0;
    std::optional<double> last_speech_end_s_;
    std::optional<double> endpoint_;
};

/// Incremental VAD: frames are labeled in arrival order once the noise floor
/// window has been seen. finish() flushes a trailing partial frame.
class Endpointer {
public:
    Endpointer(EndpointConfig cfg, int sample_rate_hz)
        : cfg_(cfg), frame_len_(0), sample_rate_hz_(sample_rate_hz), tracker_(1, 1.0)
    {
        validate(cfg_);
        require(sample_rate_hz > 0, "sample rate must be positive");
        frame_len_ = frame_length(cfg_, sample_rate_hz_);
        const double frame_s = static_cast<double>(frame_len_) / sample_rate_hz_;
        tracker_ = EndpointTracker(silence_frames_needed(cfg_, frame_s), frame_s);
    }

    /// Returns the endpoint (seconds from the first sample) once detected.
    std::optional<double> push(std::span<const double> samples)
    {
        for (double s : samples) {
            pending_.push_back(s);
            if (pending_.size() == frame_len_) {
                close_frame();
            }
        }
        return tracker_.endpoint();
    }

    std::optional<double> finish()
    {
        if (!pending_.empty()) {
            close_frame();
        }
        if (!floor_db_) {
            settle_floor();
        }
        return tracker_.endpoint();
    }

    std::optional<double> endpoint() const noexcept { return tracker_.endpoint(); }

    FrameLabels labels() const
    {
        FrameLabels out;
        out.labels = labels_;
        out.frame_len = frame_len_;
        out.n_samples = n_samples_;
        out.sample_rate_hz = sample_rate_hz_;
        return out;
    }

private:
    void close_frame()
    {
        energies_.push_back(rms_dbfs(pending_));
        n_samples_ += pending_.size();
        pending_.clear();
        if (floor_db_) {
            label(energies_.size() - 1);
        } else if (energies_.size() >= cfg_.noise_floor_frames) {
            settle_floor();
        }
    }

    void settle_floor()
    {
        if (energies_.empty()) {
            return;
        }
        const std::size_t n = std::min(cfg_.noise_floor_frames, energies_.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += energies_[i];
        }
        floor_db_ = std::min(sum / static_cast<double>(n), cfg_.max_noise_floor_dbfs);
        for (std::size_t i = labels_.size(); i < energies_.size(); ++i) {
            label(i);
        }
    }

    void label(std::size_t i)
    {
        const VoiceLabel l = energies_[i] > *floor_db_ + cfg_.energy_threshold_db ? VoiceLabel::Speech
                                                                                 : VoiceLabel::Silence;
        labels_.push_back(l);
        const double end_s = static_cast<double>(std::min((i + 1) * frame_len_, n_samples_)) / sample_rate_hz_;
        tracker_.push(l, end_s);
    }

    EndpointConfig cfg_;
    std::size_t frame_len_;
    int sample_rate_hz_;
    std::vector<double> pending_;
    std::vector<double> energies_;
    std::vector<VoiceLabel> labels_;
    std::optional<double> floor_db_;
    std::size_t n_samples_ = 0;
    EndpointTracker tracker_;
};

/// Labels non-overlapping frames (the last one may be partial) by RMS energy
/// against the noise floor plus threshold.
inline FrameLabels label_frames(const Waveform& w, const EndpointConfig& cfg)
{
    validate(w);
    validate(cfg);
    const std::size_t len = frame_length(cfg, w.sample_rate_hz);
    if (w.samples.size() < len) {
        fail(ErrorKind::InvalidArgument, "waveform is shorter than one VAD frame");
    }
    Endpointer vad(cfg, w.sample_rate_hz);
    vad.push(w.samples);
    vad.finish();
    return vad.labels();
}

/// End of the last speech frame plus the frame-quantized silence window, for
/// the first window that completes after some speech; nullopt otherwise.
inline std::optional<double> find_endpoint(const FrameLabels& labels, const EndpointConfig& cfg)
{
    validate(cfg);
    require(!labels.labels.empty(), "no frame labels");
    require(labels.frame_len > 0 && labels.sample_rate_hz > 0, "frame labels carry no framing");
    const double frame_s = labels.frame_s();
    EndpointTracker tracker(silence_frames_needed(cfg, frame_s), frame_s);
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        if (auto end = tracker.push(labels.labels[i], labels.frame_end_s(i))) {
            return end;
        }
    }
    return std::nullopt;
}

/// Concatenation of the speech-labeled frames.
inline Waveform extract_speech(const Waveform& w, const EndpointConfig& cfg)
{
    const FrameLabels labels = label_frames(w, cfg);
    Waveform out;
    out.sample_rate_hz = w.sample_rate_hz;
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        if (labels.labels[i] != VoiceLabel::Speech) {
            continue;
        }
        const std::size_t begin = i * labels.frame_len;
        const std::size_t end = std::min(begin + labels.frame_len, w.samples.size());
        out.samples.insert(out.samples.end(), w.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                           w.samples.begin() + static_cast<std::ptrdiff_t>(end));
    }
    if (out.samples.empty()) {
        fail(ErrorKind::NoSpeech, "no speech detected");
    }
    return out;
}

} // namespace lava
