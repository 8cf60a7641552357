#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lava/des.hpp"
#include "lava/endpoint.hpp"
#include "lava/error.hpp"
#include "lava/latency.hpp"
#include "lava/rvq.hpp"
#include "lava/signal.hpp"
#include "lava/stages.hpp"

namespace lava {

enum class PipelineMode { OneShot, Streaming };

inline const char* to_string(PipelineMode m) { return m == PipelineMode::OneShot ? "oneshot" : "streaming"; }

inline std::optional<PipelineMode> parse_mode(std::string_view s)
{
    if (s == "oneshot") return PipelineMode::OneShot;
    if (s == "streaming") return PipelineMode::Streaming;
    return std::nullopt;
}

/// Per-mode replacements for the stage latency models. Lets one config carry
/// separately calibrated one-shot and streaming runs.
struct ModeOverride {
    std::optional<LatencyModel> asr;
    std::optional<LatencyModel> llm;
    std::optional<LatencyModel> tts;

    friend bool operator==(const ModeOverride&, const ModeOverride&) = default;
};

struct PipelineConfig {
    PipelineMode mode = PipelineMode::Streaming;
    std::size_t flush_every_tokens = 10;
    ClockMode clock = ClockMode::Virtual;
    std::uint64_t seed = 0;
    bool cold_start = true;
    std::vector<std::string> context;

    RvqConfig rvq{16, 16, Padding::None};
    CodecSpec codec;
    std::string codebook_file;

    EndpointConfig endpoint;

    LatencyModel asr{0.1, 0.05, 2, 0.0};
    LatencyModel llm{0.08, 0.007, 2, 0.0};
    std::size_t response_tokens = 0;
    bool llm_stream_capable = true;
    LatencyModel tts{0.0, 2e-5, 2, 0.0};
    std::size_t chunk_frames = 2250;
    std::size_t frames_per_char = kDefaultFramesPerChar;

    ModeOverride oneshot_override;
    ModeOverride streaming_override;

    /// This config with `m` selected and that mode's overrides applied.
    PipelineConfig for_mode(PipelineMode m) const
    {
        PipelineConfig out = *this;
        out.mode = m;
        const ModeOverride& o = m == PipelineMode::OneShot ? oneshot_override : streaming_override;
        if (o.asr) out.asr = *o.asr;
        if (o.llm) out.llm = *o.llm;
        if (o.tts) out.tts = *o.tts;
        return out;
    }

    TtsConfig tts_config() const { return TtsConfig{chunk_frames, frames_per_char, tts}; }
};

inline void validate(const PipelineConfig& cfg)
{
    require(cfg.flush_every_tokens >= 1, "flush_every_tokens must be at least 1");
    require(cfg.mode != PipelineMode::Streaming || cfg.llm_stream_capable,
            "streaming mode requires a stream-capable LLM stage");
    validate(cfg.rvq);
    require(cfg.rvq.decoder_codebooks <= cfg.codec.n_stages, "decoder_codebooks exceeds codec n_stages");
    require(cfg.codec.n_stages >= 1 && cfg.codec.codebook_size >= 2 && cfg.codec.dim >= 1,
            "codec shape must have n_stages >= 1, codebook_size >= 2, dim >= 1");
    require(cfg.codec.train_frames >= cfg.codec.codebook_size, "train_frames must be at least codebook_size");
    validate(cfg.endpoint);
    validate(cfg.asr);
    validate(cfg.llm);
    validate(cfg.tts);
    require(cfg.chunk_frames >= 1, "chunk_frames must be positive");
    require(cfg.frames_per_char >= 1, "frames_per_char must be positive");
}

/// Latency decomposition of one run, seconds from the VAD endpoint.
/// llm_s is the full generation time in one-shot mode and the time to the
/// first flush when streaming; tts_s runs from the TTS input becoming
/// available to the first audio chunk.
struct TimeProfile {
    double asr_s = 0.0;
    double llm_s = 0.0;
    double tts_s = 0.0;
    double total_s = 0.0;

    friend bool operator==(const TimeProfile&, const TimeProfile&) = default;
};

/// Composes stage latencies into a profile. Under both modes the stages are
/// serial up to the first chunk, so total = asr + llm + tts.
inline TimeProfile replay_profile(double asr_s, double llm_s, double tts_s, PipelineMode mode)
{
    (void)mode;
    for (double v : {asr_s, llm_s, tts_s}) {
        require(std::isfinite(v) && v >= 0.0, "stage latencies must be finite and non-negative");
    }
    return {asr_s, llm_s, tts_s, asr_s + llm_s + tts_s};
}

struct StageSet {
    AsrStage& asr;
    LlmStage& llm;
    TtsStage& tts;
};

struct PipelineResult {
    PipelineMode mode = PipelineMode::Streaming;
    ClockMode clock = ClockMode::Virtual;
    double endpoint_s = 0.0;          // in input time
    bool endpoint_at_stream_end = false;
    std::string transcript;
    std::string response;
    std::vector<TextSegment> segments;  // availability relative to the endpoint
    std::vector<ChunkRecord> chunks;
    StreamTrace trace;
    TimeProfile profile;
    Waveform audio;
    Waveform reference;
};

namespace detail {

struct Gate {
    Waveform speech;
    double endpoint_s = 0.0;
    bool at_stream_end = false;
};

inline Gate gate_input(const Waveform& input, const EndpointConfig& cfg)
{
    const FrameLabels labels = label_frames(input, cfg);
    if (labels.speech_count() == 0) {
        fail(ErrorKind::NoSpeech, "vad: no speech detected in input");
    }
    Gate g;
    g.speech = extract_speech(input, cfg);
    if (auto end = find_endpoint(labels, cfg)) {
        g.endpoint_s = *end;
    } else {
        // The input ended before the silence window completed; the end of the
        // stream closes the utterance.
        g.endpoint_s = input.duration_s();
        g.at_stream_end = true;
    }
    return g;
}

inline std::string join_tokens(const std::vector<Token>& tokens)
{
    std::string s;
    for (const auto& t : tokens) s += t.text;
    return s;
}

inline void warm_up(StageSet stages, const PipelineConfig& cfg, const Waveform& speech)
{
    const DialogContext ctx{cfg.context};
    for (std::size_t i = 0; i < cfg.asr.warmup_runs; ++i) {
        in_stage("asr", [&] { return stages.asr.transcribe(speech); });
    }
    for (std::size_t i = 0; i < cfg.llm.warmup_runs; ++i) {
        in_stage("llm", [&] { return stages.llm.generate("warm up", ctx, false); });
    }
    for (std::size_t i = 0; i < cfg.tts.warmup_runs; ++i) {
        in_stage("tts", [&] {
            stages.tts.begin_utterance();
            return stages.tts.render("warm up");
        });
    }
}

} // namespace detail

/// VAD endpoint -> ASR -> LLM -> TTS with the given stage implementations.
/// t = 0 is the detected end of speech; ASR starts there and consumes the
/// speech frames. The LLM hands text to the TTS either once (one-shot) or
/// every flush_every_tokens tokens (streaming).
inline PipelineResult run_pipeline(const Waveform& input, const PipelineConfig& cfg, StageSet stages)
{
    validate(cfg);
    validate(input);
    const bool streaming = cfg.mode == PipelineMode::Streaming;
    if (streaming && !stages.llm.stream_capable()) {
        fail(ErrorKind::InvalidArgument, "streaming mode requires a stream-capable LLM stage");
    }

    detail::Gate gate = detail::gate_input(input, cfg.endpoint);
    if (cfg.cold_start) {
        detail::warm_up(stages, cfg, gate.speech);
    }

    PipelineResult r;
    r.mode = cfg.mode;
    r.clock = cfg.clock;
    r.endpoint_s = gate.endpoint_s;
    r.endpoint_at_stream_end = gate.at_stream_end;
    const DialogContext ctx{cfg.context};

    double first_flush_offset = 0.0;
    double first_available = 0.0;

    if (cfg.clock == ClockMode::Virtual) {
        Simulator sim;
        VirtualTtsWorker worker(sim, stages.tts, r.chunks);
        stages.tts.begin_utterance();
        const AsrOutput asr = in_stage("asr", [&] { return stages.asr.transcribe(gate.speech); });
        r.transcript = asr.text;
        r.profile.asr_s = asr.elapsed_s;
        sim.at(asr.elapsed_s, [&] {
            const auto tokens = in_stage("llm", [&] { return stages.llm.generate(r.transcript, ctx, streaming); });
            if (tokens.empty()) {
                fail(ErrorKind::Stage, "llm: empty response");
            }
            r.response = detail::join_tokens(tokens);
            const std::size_t first_flush = streaming ? std::min(cfg.flush_every_tokens, tokens.size()) : tokens.size();
            first_flush_offset = tokens[first_flush - 1].offset_s;
            r.segments = flush_segments(tokens, cfg.flush_every_tokens, streaming, sim.now());
            for (const auto& seg : r.segments) {
                sim.at(seg.available_s, [&worker, seg] { worker.submit(seg); });
            }
        });
        sim.run();
        first_available = r.segments.front().available_s;
        r.profile.llm_s = first_flush_offset;
    } else {
        WallClock clock;
        Channel<TextSegment> queue(64);
        std::exception_ptr tts_error;
        std::thread tts_thread([&] {
            try {
                WallTtsWorker worker(clock, stages.tts, r.chunks);
                while (auto seg = queue.pop()) {
                    worker.process(*seg);
                }
            } catch (...) {
                tts_error = std::current_exception();
                // Drain so the producer never blocks on a full queue.
                while (queue.pop()) {
                }
            }
        });
        struct Joiner {
            Channel<TextSegment>& q;
            std::thread& t;
            ~Joiner()
            {
                q.close();
                if (t.joinable()) t.join();
            }
        } joiner{queue, tts_thread};

        stages.tts.begin_utterance();
        const AsrOutput asr = in_stage("asr", [&] { return stages.asr.transcribe(gate.speech); });
        clock.sleep_until(asr.elapsed_s);
        const double asr_done = clock.now();
        r.transcript = asr.text;
        r.profile.asr_s = asr_done;

        const auto tokens = in_stage("llm", [&] { return stages.llm.generate(r.transcript, ctx, streaming); });
        if (tokens.empty()) {
            fail(ErrorKind::Stage, "llm: empty response");
        }
        r.response = detail::join_tokens(tokens);
        auto segments = flush_segments(tokens, cfg.flush_every_tokens, streaming, asr_done);
        for (auto& seg : segments) {
            clock.sleep_until(seg.available_s);
            seg.available_s = clock.now();
            r.segments.push_back(seg);
            queue.push(seg);
        }
        queue.close();
        tts_thread.join();
        if (tts_error) {
            std::rethrow_exception(tts_error);
        }
        first_available = r.segments.front().available_s;
        r.profile.llm_s = first_available - asr_done;
    }

    if (r.chunks.empty()) {
        fail(ErrorKind::Stage, "tts: produced no audio");
    }
    const int rate = stages.tts.sample_rate_hz();
    r.trace = trace_from_chunks(r.chunks, rate);
    r.audio = concat_audio(r.chunks, rate);
    r.reference = concat_audio(r.chunks, rate, true);
    r.profile.total_s = r.chunks.front().arrival_s;
    r.profile.tts_s = r.profile.total_s - first_available;
    return r;
}

inline CodebookSet load_or_train_codebooks(const PipelineConfig& cfg)
{
    if (!cfg.codebook_file.empty()) {
        const auto bytes = read_file_bytes(cfg.codebook_file);
        return load_codebooks(bytes);
    }
    return train_synthetic_codebooks(cfg.codec, cfg.seed);
}

/// Runs the pipeline with the synthetic stages built from `cfg`.
inline PipelineResult run_pipeline(const Waveform& input, const PipelineConfig& cfg, const CodebookSet& codebooks)
{
    validate(cfg);
    SyntheticAsr asr(cfg.asr);
    SyntheticLlm llm(cfg.llm, cfg.response_tokens, cfg.seed, cfg.llm_stream_capable);
    SyntheticTts tts(codebooks, cfg.rvq, cfg.tts_config(), cfg.seed);
    return run_pipeline(input, cfg, StageSet{asr, llm, tts});
}

struct ModeComparison {
    PipelineResult oneshot;
    PipelineResult streaming;

    double speedup() const
    {
        return streaming.profile.total_s > 0.0 ? oneshot.profile.total_s / streaming.profile.total_s : 1.0;
    }
};

/// Both handoff modes with identical seeds; per-mode overrides apply.
inline ModeComparison compare_modes(const Waveform& input, const PipelineConfig& cfg, const CodebookSet& codebooks)
{
    require(cfg.llm_stream_capable, "mode comparison requires a stream-capable LLM stage");
    ModeComparison c;
    c.oneshot = run_pipeline(input, cfg.for_mode(PipelineMode::OneShot), codebooks);
    c.streaming = run_pipeline(input, cfg.for_mode(PipelineMode::Streaming), codebooks);
    return c;
}

/// Test and demo input: leading silence, a Gamma-amplitude speech burst and
/// trailing silence, with faint dither throughout.
inline Waveform synthetic_utterance(double lead_s, double speech_s, double trail_s, std::uint64_t seed,
                                    int sample_rate_hz = kDefaultSampleRate)
{
    require(lead_s >= 0.0 && speech_s > 0.0 && trail_s >= 0.0, "segment durations must be non-negative");
    const auto n_lead = static_cast<std::size_t>(std::llround(lead_s * sample_rate_hz));
    const auto n_speech = static_cast<std::size_t>(std::llround(speech_s * sample_rate_hz));
    const auto n_trail = static_cast<std::size_t>(std::llround(trail_s * sample_rate_hz));
    const Waveform speech = gen_gamma_signal(n_speech, 0.4, seed, sample_rate_hz);
    Waveform w;
    w.sample_rate_hz = sample_rate_hz;
    w.samples.assign(n_lead, 0.0);
    w.samples.insert(w.samples.end(), speech.samples.begin(), speech.samples.end());
    w.samples.resize(n_lead + n_speech + n_trail, 0.0);
    SplitMix64 rng(hash_combine(seed, 0x646974686572ULL));
    for (auto& s : w.samples) {
        s += 1e-5 * rng.normal();
    }
    return w;
}

} // namespace lava
