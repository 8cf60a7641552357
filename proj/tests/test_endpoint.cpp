#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lava/endpoint.hpp"
#include "lava/rng.hpp"
#include "test_util.hpp"

using namespace lava;

namespace {

constexpr int kRate = 24000;

// Silence with faint dither, and a loud tone over [start_s, end_s).
Waveform tone_in_silence(double total_s, std::vector<std::pair<double, double>> bursts, std::uint64_t seed = 1)
{
    SplitMix64 rng(seed);
    Waveform w;
    w.sample_rate_hz = kRate;
    w.samples.resize(static_cast<std::size_t>(std::llround(total_s * kRate)));
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const double t = static_cast<double>(i) / kRate;
        double v = 1e-5 * rng.normal();
        for (auto [a, b] : bursts) {
            if (t >= a && t < b) v += 0.5 * std::sin(2.0 * std::numbers::pi * 440.0 * t);
        }
        w.samples[i] = v;
    }
    return w;
}

std::size_t frame_of(double t_s) { return static_cast<std::size_t>(t_s / 0.030); }

} // namespace

TEST(EndpointConfig, Validation)
{
    EXPECT_NO_THROW(validate(EndpointConfig{}));
    EndpointConfig c;
    c.frame_ms = 0.0;
    EXPECT_ERROR_KIND(validate(c), ErrorKind::InvalidArgument);
    c = {};
    c.silence_window_s = -1.0;
    EXPECT_ERROR_KIND(validate(c), ErrorKind::InvalidArgument);
    c = {};
    c.noise_floor_frames = 0;
    EXPECT_ERROR_KIND(validate(c), ErrorKind::InvalidArgument);
}

TEST(EndpointConfig, WindowIsFiftyFrames)
{
    const EndpointConfig c;
    EXPECT_EQ(frame_length(c, kRate), 720u);
    EXPECT_EQ(silence_frames_needed(c, 0.030), 50u);
    EXPECT_EQ(silence_frames_needed(c, 0.020), 75u);
    EXPECT_EQ(silence_frames_needed(c, 0.040), 38u);
}

TEST(LabelFrames, PureSilence)
{
    const auto labels = label_frames(tone_in_silence(2.0, {}), EndpointConfig{});
    EXPECT_EQ(labels.speech_count(), 0u);
    EXPECT_EQ(labels.labels.size(), 67u);  // 66 full frames and one partial
}

TEST(LabelFrames, ExactZerosAreSilence)
{
    const auto labels = label_frames(Waveform{std::vector<double>(24000, 0.0), kRate}, EndpointConfig{});
    EXPECT_EQ(labels.speech_count(), 0u);
}

TEST(LabelFrames, ToneBoundariesWithinOneFrame)
{
    const auto labels = label_frames(tone_in_silence(3.5, {{0.5, 1.5}}), EndpointConfig{});
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        const bool inside = i >= frame_of(0.5) + 1 && i + 1 < frame_of(1.5);
        const bool outside = i + 1 < frame_of(0.5) || i > frame_of(1.5) + 1;
        if (inside) EXPECT_EQ(labels.labels[i], VoiceLabel::Speech) << i;
        if (outside) EXPECT_EQ(labels.labels[i], VoiceLabel::Silence) << i;
    }
    EXPECT_NEAR(static_cast<double>(labels.speech_count()), 1.0 / 0.030, 2.0);
}

TEST(LabelFrames, ConstantFullScaleIsSpeech)
{
    const auto labels = label_frames(Waveform{std::vector<double>(kRate, 1.0), kRate}, EndpointConfig{});
    for (std::size_t i = EndpointConfig{}.noise_floor_frames; i < labels.labels.size(); ++i) {
        EXPECT_EQ(labels.labels[i], VoiceLabel::Speech);
    }
}

TEST(LabelFrames, RaisingThresholdNeverAddsSpeech)
{
    const Waveform w = tone_in_silence(3.0, {{0.4, 0.9}, {1.2, 1.3}}, 3);
    // Quiet second burst that only a low threshold catches.
    Waveform q = w;
    for (std::size_t i = static_cast<std::size_t>(2.0 * kRate); i < static_cast<std::size_t>(2.3 * kRate); ++i) {
        q.samples[i] += 2e-4 * std::sin(0.1 * static_cast<double>(i));
    }
    EndpointConfig lo;
    EndpointConfig hi;
    for (double th : {0.0, 5.0, 10.0, 20.0, 40.0, 80.0}) {
        lo.energy_threshold_db = th;
        hi.energy_threshold_db = th + 7.5;
        const auto a = label_frames(q, lo);
        const auto b = label_frames(q, hi);
        for (std::size_t i = 0; i < a.labels.size(); ++i) {
            if (a.labels[i] == VoiceLabel::Silence) EXPECT_EQ(b.labels[i], VoiceLabel::Silence) << th << " " << i;
        }
    }
}

TEST(LabelFrames, ShorterThanOneFrameIsAnError)
{
    EXPECT_ERROR_KIND(label_frames(Waveform{std::vector<double>(100, 0.1), kRate}, EndpointConfig{}),
                      ErrorKind::InvalidArgument);
}

TEST(FindEndpoint, SpeechEndingAtTwoSeconds)
{
    const EndpointConfig cfg;
    const auto labels = label_frames(tone_in_silence(5.0, {{0.5, 2.0}}), cfg);
    const auto end = find_endpoint(labels, cfg);
    ASSERT_TRUE(end.has_value());
    // The burst ends inside frame 66 ([1.98, 2.01)); 50 silent frames follow.
    EXPECT_NEAR(*end, 2.010 + 1.5, 1e-9);
    EXPECT_NEAR(*end, 3.5, 0.030);
}

TEST(FindEndpoint, AllSilenceHasNone)
{
    const EndpointConfig cfg;
    EXPECT_FALSE(find_endpoint(label_frames(tone_in_silence(3.0, {}), cfg), cfg).has_value());
}

TEST(FindEndpoint, WindowNeverCompletes)
{
    const EndpointConfig cfg;
    EXPECT_FALSE(find_endpoint(label_frames(tone_in_silence(2.5, {{0.5, 2.0}}), cfg), cfg).has_value());
}

TEST(FindEndpoint, ResumedSpeechMovesEndpointToSecondGap)
{
    const EndpointConfig cfg;
    const auto labels = label_frames(tone_in_silence(6.0, {{0.5, 1.4}, {2.4, 3.0}}), cfg);
    const auto end = find_endpoint(labels, cfg);
    ASSERT_TRUE(end.has_value());
    EXPECT_GT(*end, 3.0 + 1.5 - 1e-9);
    EXPECT_NEAR(*end, 3.0 + 1.5, 0.031);
}

TEST(FindEndpoint, ExceedsLastSpeechByQuantizedWindow)
{
    SplitMix64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        EndpointConfig cfg;
        cfg.frame_ms = 10.0 + static_cast<double>(rng.below(30));
        cfg.silence_window_s = 0.3 + rng.uniform();
        const double start = 0.4 + rng.uniform() * 0.3;
        const double stop = start + 0.2 + rng.uniform();
        const auto labels = label_frames(tone_in_silence(stop + cfg.silence_window_s + 0.5, {{start, stop}}, trial), cfg);
        const auto end = find_endpoint(labels, cfg);
        ASSERT_TRUE(end.has_value());
        std::size_t last = 0;
        for (std::size_t i = 0; i < labels.labels.size(); ++i) {
            if (labels.labels[i] == VoiceLabel::Speech) last = i;
        }
        const double frame_s = labels.frame_s();
        EXPECT_NEAR(*end - labels.frame_end_s(last),
                    static_cast<double>(silence_frames_needed(cfg, frame_s)) * frame_s, 1e-9);
        EXPECT_GE(*end, labels.frame_end_s(last) + cfg.silence_window_s - 1e-9);
    }
}

TEST(FindEndpoint, EmptyLabelsRejected)
{
    EXPECT_ERROR_KIND(find_endpoint(FrameLabels{}, EndpointConfig{}), ErrorKind::InvalidArgument);
}

TEST(Endpointer, StreamingMatchesBatch)
{
    const EndpointConfig cfg;
    const Waveform w = tone_in_silence(5.0, {{0.7, 1.9}}, 8);
    Endpointer vad(cfg, kRate);
    std::optional<double> first_seen;
    std::size_t fed = 0;
    SplitMix64 rng(1);
    while (fed < w.samples.size()) {
        const std::size_t n = std::min<std::size_t>(1 + rng.below(2000), w.samples.size() - fed);
        const auto end = vad.push(std::span(w.samples).subspan(fed, n));
        fed += n;
        if (end && !first_seen) {
            first_seen = end;
            // Detected no later than the end of the frame that completed the window.
            EXPECT_LE(*end, static_cast<double>(fed) / kRate + 1e-9);
        }
    }
    vad.finish();
    const auto batch = label_frames(w, cfg);
    EXPECT_EQ(vad.labels().labels, batch.labels);
    ASSERT_TRUE(first_seen.has_value());
    EXPECT_EQ(*first_seen, *find_endpoint(batch, cfg));
}

TEST(ExtractSpeech, ToneDurationWithinTwoFrames)
{
    const Waveform w = tone_in_silence(3.5, {{0.5, 1.5}});
    const Waveform s = extract_speech(w, EndpointConfig{});
    EXPECT_NEAR(s.duration_s(), 1.0, 2 * 0.030);
    EXPECT_LE(s.duration_s(), w.duration_s());
}

TEST(ExtractSpeech, AllSpeechIsIdentity)
{
    Waveform w{std::vector<double>(kRate + 100), kRate};
    for (std::size_t i = 0; i < w.samples.size(); ++i) w.samples[i] = 0.8 * std::sin(0.05 * static_cast<double>(i));
    EXPECT_EQ(extract_speech(w, EndpointConfig{}), w);
}

TEST(ExtractSpeech, AllSilenceIsAnError)
{
    EXPECT_ERROR_KIND(extract_speech(tone_in_silence(1.0, {}), EndpointConfig{}), ErrorKind::NoSpeech);
}
