#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lava/des.hpp"
#include "lava/error.hpp"
#include "lava/latency.hpp"
#include "lava/rng.hpp"
#include "lava/rvq.hpp"
#include "lava/signal.hpp"

namespace lava {

/// Affine cost model: fixed_s + per_unit_s * units. The first warmup_runs
/// invocations of a stage instance pay an extra warmup_s (cold start).
struct LatencyModel {
    double fixed_s = 0.0;
    double per_unit_s = 0.0;
    std::size_t warmup_runs = 2;
    double warmup_s = 0.0;

    double cost(double units) const noexcept { return fixed_s + per_unit_s * units; }

    double cold_penalty(std::size_t run_index) const noexcept { return run_index < warmup_runs ? warmup_s : 0.0; }

    friend bool operator==(const LatencyModel&, const LatencyModel&) = default;
};

inline void validate(const LatencyModel& m)
{
    require(std::isfinite(m.fixed_s) && m.fixed_s >= 0.0, "fixed_s must be non-negative");
    require(std::isfinite(m.per_unit_s) && m.per_unit_s >= 0.0, "per_unit_s must be non-negative");
    require(std::isfinite(m.warmup_s) && m.warmup_s >= 0.0, "warmup_s must be non-negative");
}

/// Opaque prior-turn payload handed to the stages.
struct DialogContext {
    std::vector<std::string> turns;
};

// ---------------------------------------------------------------------------
// ASR

struct AsrOutput {
    std::string text;
    double elapsed_s = 0.0;
};

class AsrStage {
public:
    virtual ~AsrStage() = default;
    virtual AsrOutput transcribe(const Waveform& speech) = 0;
};

inline constexpr std::array<std::string_view, 32> kAsrLexicon = {
    "hello", "my",     "order",   "has",    "not",     "arrived", "yet",   "can",
    "you",   "check",  "the",     "status", "please",  "I",       "need",  "help",
    "with",  "a",      "refund",  "for",    "account", "billing", "issue", "today",
    "thanks", "where", "is",      "package", "it",     "was",     "late",  "again",
};

inline std::uint64_t hash_samples(const Waveform& w)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xffu;
            h *= 0x100000001b3ULL;
        }
    };
    feed(static_cast<std::uint64_t>(w.sample_rate_hz));
    for (double s : w.samples) {
        feed(static_cast<std::uint64_t>(std::llround(std::clamp(s, -1.0, 1.0) * 32768.0)));
    }
    return h;
}

/// Deterministic stand-in transcript: about 2.5 words per second of audio,
/// drawn from a fixed lexicon by a content hash of the samples.
inline std::string pseudo_transcript(const Waveform& w)
{
    const std::uint64_t h = hash_samples(w);
    const auto n_words = static_cast<std::size_t>(std::max<long long>(1, std::llround(w.duration_s() * 2.5)));
    std::string out;
    for (std::size_t i = 0; i < n_words; ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += kAsrLexicon[hash_combine(h, i) % kAsrLexicon.size()];
    }
    return out;
}

/// Steady-state synthetic ASR: elapsed = fixed + per_unit * duration_s.
inline AsrOutput synth_asr(const Waveform& w, const LatencyModel& model)
{
    validate(w);
    validate(model);
    return {pseudo_transcript(w), model.cost(w.duration_s())};
}

class SyntheticAsr final : public AsrStage {
public:
    explicit SyntheticAsr(LatencyModel model) : model_(model) { validate(model_); }

    AsrOutput transcribe(const Waveform& speech) override
    {
        AsrOutput out = synth_asr(speech, model_);
        out.elapsed_s += model_.cold_penalty(runs_++);
        return out;
    }

    std::size_t runs() const noexcept { return runs_; }

private:
    LatencyModel model_;
    std::size_t runs_ = 0;
};

// ---------------------------------------------------------------------------
// LLM

/// A generated token and when it became available, relative to the start of
/// generation.
struct Token {
    std::string text;
    double offset_s = 0.0;

    friend bool operator==(const Token&, const Token&) = default;
};

class LlmStage {
public:
    virtual ~LlmStage() = default;
    virtual std::vector<Token> generate(const std::string& prompt, const DialogContext& context, bool stream) = 0;
    virtual bool stream_capable() const { return true; }
};

inline constexpr std::array<std::string_view, 12> kResponseBank = {
    "I am an AI, I am designed to assist and provide helpful responses to your queries.",
    "I am a machine learning model, trained on a vast amount of text data.",
    "Let me check the status of your order right away.",
    "Your package left our warehouse yesterday and should arrive within two days.",
    "I can help you with a refund once I confirm a few details.",
    "Could you please share the order number printed on your receipt?",
    "Thank you for your patience while I look into this.",
    "I have updated your account and the change will apply to the next billing cycle.",
    "Is there anything else I can help you with today?",
    "I understand how frustrating a late delivery can be.",
    "The refund will appear on your statement in three to five business days.",
    "I have escalated this issue to our support team for a follow up.",
};

inline std::uint64_t hash_text(std::string_view s, std::uint64_t seed = 0)
{
    std::uint64_t h = mix64(seed ^ 0x6c6c6d5f74657874ULL);
    for (unsigned char c : s) {
        h = hash_combine(h, c);
    }
    return hash_combine(h, s.size());
}

inline std::vector<std::string> split_words(std::string_view s)
{
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ') ++i;
        if (i > start) out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

/// Templated response words. With response_tokens == 0 the length (30 to 59
/// words) is picked by the prompt hash; otherwise exactly that many words.
inline std::vector<std::string> response_words(const std::string& prompt, const DialogContext& context,
                                               std::size_t response_tokens, std::uint64_t seed)
{
    std::uint64_t h = hash_text(prompt, seed);
    for (const auto& turn : context.turns) {
        h = hash_combine(h, hash_text(turn));
    }
    const std::size_t target = response_tokens > 0 ? response_tokens : 30 + h % 30;
    std::vector<std::string> words;
    std::size_t pick = h % kResponseBank.size();
    while (words.size() < target) {
        for (auto& w : split_words(kResponseBank[pick])) {
            words.push_back(std::move(w));
        }
        pick = (pick + 1 + hash_combine(h, words.size()) % (kResponseBank.size() - 1)) % kResponseBank.size();
    }
    if (response_tokens > 0) {
        words.resize(response_tokens);
    }
    return words;
}

/// Token k (1-based) is available at fixed + per_unit * k when streaming;
/// in one-shot mode every token is available at fixed + per_unit * n.
/// Tokens after the first carry a leading space so they concatenate back to
/// the response text.
inline std::vector<Token> synth_llm(const std::string& text, const DialogContext& context, const LatencyModel& model,
                                    bool stream, std::size_t response_tokens = 0, std::uint64_t seed = 0)
{
    require(!text.empty(), "LLM prompt is empty");
    validate(model);
    const auto words = response_words(text, context, response_tokens, seed);
    std::vector<Token> out;
    out.reserve(words.size());
    const double all_done = model.cost(static_cast<double>(words.size()));
    for (std::size_t k = 0; k < words.size(); ++k) {
        Token t;
        t.text = k == 0 ? words[k] : " " + words[k];
        t.offset_s = stream ? model.cost(static_cast<double>(k + 1)) : all_done;
        out.push_back(std::move(t));
    }
    return out;
}

class SyntheticLlm final : public LlmStage {
public:
    SyntheticLlm(LatencyModel model, std::size_t response_tokens = 0, std::uint64_t seed = 0,
                 bool stream_capable = true)
        : model_(model), response_tokens_(response_tokens), seed_(seed), stream_capable_(stream_capable)
    {
        validate(model_);
    }

    std::vector<Token> generate(const std::string& prompt, const DialogContext& context, bool stream) override
    {
        auto tokens = synth_llm(prompt, context, model_, stream, response_tokens_, seed_);
        const double penalty = model_.cold_penalty(runs_++);
        for (auto& t : tokens) {
            t.offset_s += penalty;
        }
        return tokens;
    }

    bool stream_capable() const override { return stream_capable_; }
    std::size_t runs() const noexcept { return runs_; }

private:
    LatencyModel model_;
    std::size_t response_tokens_;
    std::uint64_t seed_;
    bool stream_capable_;
    std::size_t runs_ = 0;
};

/// Groups tokens into TTS segments: one per `flush_every` tokens (plus a
/// final partial one) when streaming, a single segment otherwise. Each
/// segment is available when its last token is.
struct TextSegment {
    std::string text;
    double available_s = 0.0;
    std::size_t index = 0;

    friend bool operator==(const TextSegment&, const TextSegment&) = default;
};

inline std::vector<TextSegment> flush_segments(const std::vector<Token>& tokens, std::size_t flush_every, bool stream,
                                               double base_s = 0.0)
{
    require(flush_every >= 1, "flush_every_tokens must be at least 1");
    std::vector<TextSegment> out;
    TextSegment cur;
    std::size_t in_segment = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        cur.text += tokens[i].text;
        cur.available_s = base_s + tokens[i].offset_s;
        ++in_segment;
        const bool last = i + 1 == tokens.size();
        if (last || (stream && in_segment == flush_every)) {
            cur.index = out.size();
            out.push_back(std::move(cur));
            cur = TextSegment{};
            in_segment = 0;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// TTS

inline constexpr std::size_t kDefaultFramesPerChar = 2;

inline constexpr double kEmbedGammaShape = 0.4;
inline constexpr double kEmbedScale = 0.25;

/// frames_per_char seeded-hash frames per input byte, values in [-1, 1].
/// Each value is a random sign times a Gamma(0.4) amplitude (scaled, clipped
/// at 1), so the rendered audio has speech-like amplitude statistics.
/// Frame contents depend on the seed, the byte and its absolute position
/// (char_offset + i), so splitting a text into segments does not change the
/// frames.
inline Frames char_embed(std::string_view text, std::size_t dim, std::uint64_t seed,
                         std::size_t frames_per_char = kDefaultFramesPerChar, std::size_t char_offset = 0)
{
    require(!text.empty(), "cannot embed an empty text segment");
    require(dim >= 1, "embedding dimension must be positive");
    require(frames_per_char >= 1, "frames_per_char must be positive");
    Frames out(dim);
    out.values.reserve(text.size() * frames_per_char * dim);
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto byte = static_cast<unsigned char>(text[i]);
        const std::uint64_t base = hash_combine(hash_combine(seed, char_offset + i), byte);
        for (std::size_t f = 0; f < frames_per_char; ++f) {
            const std::uint64_t fh = hash_combine(base, f);
            for (std::size_t d = 0; d < dim; ++d) {
                SplitMix64 rng(hash_combine(fh, d));
                const double a = std::min(1.0, kEmbedScale * rng.gamma(kEmbedGammaShape));
                out.values.push_back(rng.uniform() < 0.5 ? -a : a);
            }
        }
    }
    return out;
}

struct TtsConfig {
    std::size_t chunk_frames = 2250;  // 2250 frames x 16 samples = 1.5 s at 24 kHz
    std::size_t frames_per_char = kDefaultFramesPerChar;
    LatencyModel model;

    friend bool operator==(const TtsConfig&, const TtsConfig&) = default;
};

/// Audio for one chunk plus its unquantized reference and modeled cost.
struct RenderedChunk {
    std::vector<double> samples;
    std::vector<double> reference;
    std::size_t frames = 0;
    double cost_s = 0.0;
};

class TtsStage {
public:
    virtual ~TtsStage() = default;
    virtual void begin_utterance() = 0;
    virtual std::vector<RenderedChunk> render(const std::string& text) = 0;
    virtual int sample_rate_hz() const { return kDefaultSampleRate; }
};

/// Embeds text, runs it through the RVQ codec and renders each decoded
/// frame's D components as D consecutive samples. Chunk cost is
/// fixed + per_unit * frames * q_iterations.
class SyntheticTts final : public TtsStage {
public:
    SyntheticTts(const CodebookSet& codebooks, RvqConfig rvq, TtsConfig cfg, std::uint64_t seed)
        : codebooks_(&codebooks), rvq_(rvq), cfg_(cfg), seed_(seed)
    {
        validate(rvq_, codebooks_);
        validate(cfg_.model);
        require(cfg_.chunk_frames >= 1, "chunk_frames must be positive");
        require(cfg_.frames_per_char >= 1, "frames_per_char must be positive");
    }

    void begin_utterance() override
    {
        penalty_ = cfg_.model.cold_penalty(runs_++);
        char_offset_ = 0;
    }

    std::vector<RenderedChunk> render(const std::string& text) override
    {
        const Frames frames = char_embed(text, codebooks_->dim(), seed_, cfg_.frames_per_char, char_offset_);
        char_offset_ += text.size();
        const Frames decoded = decode(encode(frames, *codebooks_, rvq_), *codebooks_);

        std::vector<RenderedChunk> out;
        const std::size_t dim = codebooks_->dim();
        for (std::size_t begin = 0; begin < frames.size(); begin += cfg_.chunk_frames) {
            const std::size_t n = std::min(cfg_.chunk_frames, frames.size() - begin);
            RenderedChunk c;
            c.frames = n;
            c.samples.assign(decoded.values.begin() + static_cast<std::ptrdiff_t>(begin * dim),
                             decoded.values.begin() + static_cast<std::ptrdiff_t>((begin + n) * dim));
            c.reference.assign(frames.values.begin() + static_cast<std::ptrdiff_t>(begin * dim),
                               frames.values.begin() + static_cast<std::ptrdiff_t>((begin + n) * dim));
            c.cost_s = cfg_.model.cost(static_cast<double>(n * rvq_.q_iterations));
            c.cost_s += penalty_;
            penalty_ = 0.0;
            out.push_back(std::move(c));
        }
        return out;
    }

    std::size_t runs() const noexcept { return runs_; }

private:
    const CodebookSet* codebooks_;
    RvqConfig rvq_;
    TtsConfig cfg_;
    std::uint64_t seed_;
    std::size_t runs_ = 0;
    std::size_t char_offset_ = 0;
    double penalty_ = 0.0;  // pending cold-start cost for the next chunk
};

/// A chunk as delivered: which segment it renders and when it arrived.
struct ChunkRecord {
    RenderedChunk chunk;
    std::size_t segment_index = 0;
    double segment_available_s = 0.0;
    double arrival_s = 0.0;
};

/// Rethrows anything a stage throws as a Stage error naming the stage.
template <typename F>
decltype(auto) in_stage(const char* stage, F&& f)
{
    try {
        return std::forward<F>(f)();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Stage) {
            throw;
        }
        fail(ErrorKind::Stage, std::string(stage) + ": " + e.what());
    } catch (const std::exception& e) {
        fail(ErrorKind::Stage, std::string(stage) + ": " + e.what());
    }
}

/// Single TTS worker on a Simulator. Segments are consumed FIFO; a chunk is
/// never preempted, and chunks of a segment complete back to back.
class VirtualTtsWorker {
public:
    VirtualTtsWorker(Simulator& sim, TtsStage& tts, std::vector<ChunkRecord>& out)
        : sim_(&sim), tts_(&tts), out_(&out)
    {
    }

    /// Call from within a simulator event at the segment's availability time.
    void submit(TextSegment seg)
    {
        pending_.push_back(std::move(seg));
        if (!busy_) {
            start_next();
        }
    }

private:
    void start_next()
    {
        if (pending_.empty()) {
            busy_ = false;
            return;
        }
        busy_ = true;
        TextSegment seg = std::move(pending_.front());
        pending_.pop_front();
        auto chunks = in_stage("tts", [&] { return tts_->render(seg.text); });
        auto batch = std::make_shared<std::vector<RenderedChunk>>(std::move(chunks));
        emit(std::move(batch), 0, seg.index, seg.available_s);
    }

    void emit(std::shared_ptr<std::vector<RenderedChunk>> batch, std::size_t k, std::size_t seg_index, double avail)
    {
        if (k >= batch->size()) {
            start_next();
            return;
        }
        const double cost = (*batch)[k].cost_s;
        sim_->after(cost, [this, batch, k, seg_index, avail] {
            out_->push_back(ChunkRecord{std::move((*batch)[k]), seg_index, avail, sim_->now()});
            emit(batch, k + 1, seg_index, avail);
        });
    }

    Simulator* sim_;
    TtsStage* tts_;
    std::vector<ChunkRecord>* out_;
    std::deque<TextSegment> pending_;
    bool busy_ = false;
};

/// Wall-clock TTS worker: renders a segment, then holds each chunk until its
/// modeled cost has elapsed since work on it began (or longer, if the real
/// computation took longer).
class WallTtsWorker {
public:
    WallTtsWorker(const WallClock& clock, TtsStage& tts, std::vector<ChunkRecord>& out)
        : clock_(&clock), tts_(&tts), out_(&out)
    {
    }

    void process(const TextSegment& seg)
    {
        double start = clock_->now();
        auto chunks = in_stage("tts", [&] { return tts_->render(seg.text); });
        for (auto& c : chunks) {
            clock_->sleep_until(start + c.cost_s);
            const double arrival = clock_->now();
            out_->push_back(ChunkRecord{std::move(c), seg.index, seg.available_s, arrival});
            start = arrival;
        }
    }

private:
    const WallClock* clock_;
    TtsStage* tts_;
    std::vector<ChunkRecord>* out_;
};

inline StreamTrace trace_from_chunks(const std::vector<ChunkRecord>& chunks, int sample_rate_hz)
{
    StreamTrace t;
    for (const auto& c : chunks) {
        t.events.push_back({c.arrival_s, static_cast<double>(c.chunk.samples.size()) / sample_rate_hz});
    }
    t.generation_end_s = chunks.empty() ? 0.0 : chunks.back().arrival_s;
    return t;
}

inline Waveform concat_audio(const std::vector<ChunkRecord>& chunks, int sample_rate_hz, bool reference = false)
{
    Waveform w;
    w.sample_rate_hz = sample_rate_hz;
    for (const auto& c : chunks) {
        const auto& src = reference ? c.chunk.reference : c.chunk.samples;
        w.samples.insert(w.samples.end(), src.begin(), src.end());
    }
    return w;
}

struct TtsRun {
    std::vector<ChunkRecord> chunks;
    StreamTrace trace;
    Waveform audio;
    Waveform reference;
};

/// Runs one utterance through a TTS stage. Segment availability times are
/// relative to the start of the run.
inline TtsRun synth_tts(const std::vector<TextSegment>& segments, TtsStage& tts, ClockMode clock = ClockMode::Virtual)
{
    require(!segments.empty(), "no text segments to synthesize");
    TtsRun run;
    tts.begin_utterance();
    if (clock == ClockMode::Virtual) {
        Simulator sim;
        VirtualTtsWorker worker(sim, tts, run.chunks);
        for (const auto& seg : segments) {
            sim.at(seg.available_s, [&worker, seg] { worker.submit(seg); });
        }
        sim.run();
    } else {
        WallClock wall;
        WallTtsWorker worker(wall, tts, run.chunks);
        for (const auto& seg : segments) {
            wall.sleep_until(seg.available_s);
            worker.process(seg);
        }
    }
    const int rate = tts.sample_rate_hz();
    run.trace = trace_from_chunks(run.chunks, rate);
    run.audio = concat_audio(run.chunks, rate);
    run.reference = concat_audio(run.chunks, rate, true);
    return run;
}

/// Single-segment convenience form with a fresh synthetic TTS (warm).
inline TtsRun synth_tts(const std::string& text, const CodebookSet& codebooks, const RvqConfig& rvq,
                        const TtsConfig& cfg, std::uint64_t seed, ClockMode clock = ClockMode::Virtual)
{
    TtsConfig warm = cfg;
    warm.model.warmup_s = 0.0;
    SyntheticTts tts(codebooks, rvq, warm, seed);
    return synth_tts({TextSegment{text, 0.0, 0}}, tts, clock);
}

// ---------------------------------------------------------------------------
// Codebooks for the synthetic TTS

struct CodecSpec {
    std::size_t n_stages = 32;
    std::size_t codebook_size = 64;
    std::size_t dim = 16;
    std::size_t train_frames = 2048;

    friend bool operator==(const CodecSpec&, const CodecSpec&) = default;
};

inline std::uint64_t training_seed(std::uint64_t seed) { return hash_combine(seed, 0x747261696e696e67ULL); }

/// Training frames drawn from the same embedding as synthesis but with a
/// derived seed, so synthesized utterances are never training data.
inline Frames training_frames(const CodecSpec& spec, std::uint64_t seed)
{
    require(spec.train_frames >= spec.codebook_size, "train_frames must be at least codebook_size");
    std::string corpus;
    const std::size_t chars = (spec.train_frames + kDefaultFramesPerChar - 1) / kDefaultFramesPerChar;
    for (std::size_t i = 0; corpus.size() < chars; ++i) {
        corpus += kResponseBank[i % kResponseBank.size()];
        corpus += ' ';
    }
    corpus.resize(chars);
    Frames f = char_embed(corpus, spec.dim, training_seed(seed));
    f.values.resize(spec.train_frames * spec.dim);
    return f;
}

inline CodebookSet train_synthetic_codebooks(const CodecSpec& spec, std::uint64_t seed)
{
    return train_codebooks(training_frames(spec, seed), spec.n_stages, spec.codebook_size, training_seed(seed));
}

} // namespace lava
