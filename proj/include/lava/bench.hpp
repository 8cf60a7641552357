#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lava/endpoint.hpp"
#include "lava/error.hpp"
#include "lava/json_io.hpp"
#include "lava/latency.hpp"
#include "lava/pipeline.hpp"
#include "lava/quality.hpp"
#include "lava/rvq.hpp"
#include "lava/signal.hpp"
#include "lava/stages.hpp"

namespace lava::bench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitStage = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kSeedEnv = "LAVA_BENCH_SEED";
inline constexpr int kSweepSchemaVersion = 1;

/// 151 characters.
inline constexpr const char* kShortText =
    "I am an AI, I am designed to assist and provide helpful responses to your queries. "
    "I am a machine learning model, trained on a vast amount of text data";

/// 451 characters; starts with kShortText.
inline constexpr const char* kLongText =
    "I am an AI, I am designed to assist and provide helpful responses to your queries. "
    "I am a machine learning model, trained on a vast amount of text data"
    ". I can answer questions, summarize documents, and help you plan your day. "
    "When a question is unclear, I will ask a short follow up question. "
    "I keep my replies brief so that you can listen to them quickly, "
    "and I pause between sentences so the talk feels natural. "
    "Let me know how I can help out today.";

/// Maps a failure to the CLI exit code: stage failures are runtime errors,
/// everything else is a usage, config or input problem.
inline int exit_code_for(const Error& e) { return e.kind() == ErrorKind::Stage ? kExitStage : kExitUsage; }

template <typename F>
int guarded(std::ostream& err, F&& f)
{
    try {
        return f();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitStage;
    }
}

/// Flag values shared by the pipeline-style commands; unset fields keep the
/// config file's value.
struct ConfigFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> clock;
    std::optional<std::size_t> q;
    std::optional<std::size_t> decoder_codebooks;
    std::optional<std::string> padding;
    std::optional<std::size_t> flush_every;
    std::optional<std::string> codebook_file;
    std::optional<double> frame_ms;
    std::optional<double> threshold_db;
    std::optional<double> silence_window_s;
};

inline std::optional<std::uint64_t> env_seed(const char* value)
{
    if (value == nullptr || *value == '\0') {
        return std::nullopt;
    }
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(value, &end, 10);
    if (errno != 0 || *end != '\0' || value[0] == '-') {
        fail(ErrorKind::InvalidArgument, std::string(kSeedEnv) + " must be a non-negative integer");
    }
    return v;
}

/// Seed precedence: --seed, then LAVA_BENCH_SEED, then the config file.
inline PipelineConfig resolve_config(const ConfigFlags& f, const char* env_seed_value)
{
    PipelineConfig cfg;
    if (!f.config_path.empty()) {
        std::string text;
        try {
            const auto bytes = read_file_bytes(f.config_path);
            text.assign(bytes.begin(), bytes.end());
        } catch (const Error& e) {
            fail(ErrorKind::Io, e.what());
        }
        cfg = parse_pipeline_config(text);
    }
    if (f.seed) {
        cfg.seed = *f.seed;
    } else if (auto s = env_seed(env_seed_value)) {
        cfg.seed = *s;
    }
    if (f.clock) {
        const auto c = parse_clock(*f.clock);
        if (!c) fail(ErrorKind::InvalidArgument, "--clock must be virtual or wall");
        cfg.clock = *c;
    }
    if (f.padding) {
        const auto p = parse_padding(*f.padding);
        if (!p) fail(ErrorKind::InvalidArgument, "--padding must be none, mean or concat");
        cfg.rvq.padding = *p;
    }
    if (f.q) {
        cfg.rvq.q_iterations = *f.q;
    }
    if (f.decoder_codebooks) {
        cfg.rvq.decoder_codebooks = *f.decoder_codebooks;
    } else if (f.q || f.padding) {
        cfg.rvq.decoder_codebooks = cfg.rvq.padding == Padding::None ? cfg.rvq.q_iterations : cfg.codec.n_stages;
    }
    if (f.flush_every) cfg.flush_every_tokens = *f.flush_every;
    if (f.codebook_file) cfg.codebook_file = *f.codebook_file;
    if (f.frame_ms) cfg.endpoint.frame_ms = *f.frame_ms;
    if (f.threshold_db) cfg.endpoint.energy_threshold_db = *f.threshold_db;
    if (f.silence_window_s) cfg.endpoint.silence_window_s = *f.silence_window_s;
    validate(cfg);
    return cfg;
}

inline CodebookSet codebooks_for(const PipelineConfig& cfg)
{
    CodebookSet cb = load_or_train_codebooks(cfg);
    require(cb.dim() == cfg.codec.dim, "codebook dimension does not match codec.dim");
    validate(cfg.rvq, &cb);
    return cb;
}

// ---------------------------------------------------------------------------
// pipeline

struct PipelineArgs {
    ConfigFlags flags;
    std::string mode = "streaming";  // oneshot | streaming | both
    std::string input_path;          // empty: built-in synthetic utterance
};

inline json run_pipeline_report(const PipelineArgs& a, const char* env_seed_value)
{
    if (a.mode != "oneshot" && a.mode != "streaming" && a.mode != "both") {
        fail(ErrorKind::InvalidArgument, "--mode must be oneshot, streaming or both");
    }
    PipelineConfig cfg = resolve_config(a.flags, env_seed_value);
    const Waveform input =
        a.input_path.empty() ? synthetic_utterance(0.5, 1.5, 2.0, cfg.seed) : read_wav_file(a.input_path);
    const CodebookSet cb = codebooks_for(cfg);

    json out;
    out["seed"] = cfg.seed;
    out["clock"] = to_string(cfg.clock);
    out["rvq"] = {{"q_iterations", cfg.rvq.q_iterations},
                  {"decoder_codebooks", cfg.rvq.decoder_codebooks},
                  {"padding", to_string(cfg.rvq.padding)}};
    out["runs"] = json::array();
    if (a.mode == "both") {
        const ModeComparison c = compare_modes(input, cfg, cb);
        out["runs"].push_back(to_json(c.oneshot));
        out["runs"].push_back(to_json(c.streaming));
        out["speedup"] = round_to(c.speedup(), 3);
    } else {
        const PipelineMode m = *parse_mode(a.mode);
        out["runs"].push_back(to_json(run_pipeline(input, cfg.for_mode(m), cb)));
    }
    return out;
}

inline int cmd_pipeline(const PipelineArgs& a, std::ostream& out, std::ostream& err,
                        const char* env_seed_value = std::getenv(kSeedEnv))
{
    return guarded(err, [&] {
        out << run_pipeline_report(a, env_seed_value).dump(2) << '\n';
        return kExitOk;
    });
}

// ---------------------------------------------------------------------------
// sweep

struct SweepInput {
    std::string label;
    std::string text;
};

struct SweepSpec {
    std::vector<std::size_t> q_values{16, 20, 24, 32};
    std::vector<Padding> paddings{Padding::None, Padding::Mean, Padding::Concat};
    std::vector<SweepInput> inputs;  // empty: the 151- and 451-character texts
    std::size_t repetitions = 1;
    std::size_t decoder_codebooks = 0;  // 0: codec n_stages
};

inline std::vector<SweepInput> default_sweep_inputs()
{
    const std::string s = kShortText;
    const std::string l = kLongText;
    return {{std::to_string(s.size()) + " chars", s}, {std::to_string(l.size()) + " chars", l}};
}

inline void validate(const SweepSpec& s, const CodecSpec& codec)
{
    require(!s.q_values.empty(), "sweep needs at least one q value");
    require(!s.paddings.empty(), "sweep needs at least one padding mode");
    require(s.repetitions >= 1, "repetitions must be at least 1");
    const std::size_t width = s.decoder_codebooks == 0 ? codec.n_stages : s.decoder_codebooks;
    require(width <= codec.n_stages, "decoder codebooks exceed codec n_stages");
    for (std::size_t q : s.q_values) {
        require(q >= 1, "q values must be at least 1");
        require(q <= codec.n_stages, "q=" + std::to_string(q) + " exceeds trained n_stages "
                                         + std::to_string(codec.n_stages));
        for (Padding p : s.paddings) {
            if (p != Padding::None) {
                require(q <= width, "q=" + std::to_string(q) + " exceeds decoder codebooks " + std::to_string(width));
            }
        }
    }
    for (const auto& in : s.inputs) {
        require(!in.text.empty(), "sweep texts must be non-empty");
        require(in.label.find_first_of(",\"\n\r") == std::string::npos, "input labels may not contain , \" or newlines");
    }
}

inline std::string padding_row_name(Padding p, std::size_t decoder_width)
{
    switch (p) {
    case Padding::None: return "n Mimi Codebooks";
    case Padding::Mean: return std::to_string(decoder_width) + " Mimi Codebooks + Mean Pad";
    case Padding::Concat: return std::to_string(decoder_width) + " Mimi Codebooks + Concat Pad";
    }
    return {};
}

namespace detail {

struct SweepCell {
    std::vector<std::optional<double>> latency;  // one value per report row
    std::vector<double> reference_snr;           // one per padding
    std::vector<double> wada_utterance;
    std::vector<double> wada_chunk_mean;
};

inline std::vector<std::optional<double>> report_values(const LatencyReport& r)
{
    return {r.first_chunk_latency_ms,
            r.rtf,
            static_cast<double>(r.n_chunks),
            r.avg_chunk_size_ms,
            r.avg_inter_chunk_latency_ms,
            r.min_inter_chunk_latency_ms,
            r.max_inter_chunk_latency_ms,
            r.chunks_per_second,
            static_cast<double>(r.underrun_count)};
}

inline constexpr int kReportDecimals[] = {1, 3, 0, 1, 1, 1, 1, 2, 0};

inline double chunk_mean_wada(const std::vector<ChunkRecord>& chunks, int rate)
{
    double sum = 0.0;
    for (const auto& c : chunks) {
        sum += wada_snr(Waveform{c.chunk.samples, rate});
    }
    return sum / static_cast<double>(chunks.size());
}

} // namespace detail

/// One column per q, rows per input: the streaming metrics of the TTS run,
/// then reference and WADA SNR rows per decoder configuration. Row 1 carries
/// the schema version and the parameters that determine the numbers.
inline void write_sweep_csv(std::ostream& out, const SweepSpec& spec, const PipelineConfig& cfg, const CodebookSet& cb)
{
    validate(spec, cfg.codec);
    const std::size_t width = spec.decoder_codebooks == 0 ? cb.n_stages() : spec.decoder_codebooks;
    const auto inputs = spec.inputs.empty() ? default_sweep_inputs() : spec.inputs;
    const TtsConfig tts_cfg = cfg.tts_config();

    char header[512];
    std::snprintf(header, sizeof header,
                  "# lava-bench sweep schema=%d seed=%llu codec=%zux%zux%zu decoder_codebooks=%zu chunk_frames=%zu "
                  "frames_per_char=%zu tts_fixed_s=%.10g tts_per_unit_s=%.10g clock=%s repetitions=%zu\n",
                  kSweepSchemaVersion, static_cast<unsigned long long>(cfg.seed), cb.n_stages(), cb.codebook_size(),
                  cb.dim(), width, cfg.chunk_frames, cfg.frames_per_char, cfg.tts.fixed_s, cfg.tts.per_unit_s,
                  to_string(cfg.clock), spec.repetitions);
    out << header;
    out << "Input,Metric (RVQ Iterations)";
    for (std::size_t q : spec.q_values) out << ',' << q;
    out << '\n';

    static const char* const kLatencyRows[] = {kRowFirstChunk, kRowRtf,      kRowChunks,
                                               kRowChunkSize,  kRowAvgInter, kRowMinInter,
                                               kRowMaxInter,   kRowChunksPerSecond, kRowUnderruns};
    constexpr std::size_t n_rows = std::size(kLatencyRows);

    for (const auto& input : inputs) {
        std::vector<detail::SweepCell> cells;
        for (std::size_t q : spec.q_values) {
            detail::SweepCell cell;
            cell.latency.assign(n_rows, std::nullopt);
            std::vector<double> sums(n_rows, 0.0);
            std::vector<std::size_t> counts(n_rows, 0);
            for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
                const TtsRun run = synth_tts(input.text, cb, RvqConfig{q, q, Padding::None}, tts_cfg, cfg.seed, cfg.clock);
                const auto values = detail::report_values(summarize(run.trace));
                for (std::size_t i = 0; i < n_rows; ++i) {
                    if (values[i]) {
                        sums[i] += *values[i];
                        ++counts[i];
                    }
                }
            }
            for (std::size_t i = 0; i < n_rows; ++i) {
                if (counts[i] == spec.repetitions) {
                    cell.latency[i] = sums[i] / static_cast<double>(counts[i]);
                }
            }
            for (Padding p : spec.paddings) {
                const RvqConfig rvq = p == Padding::None || q == width ? RvqConfig{q, q, Padding::None}
                                                                       : RvqConfig{q, width, p};
                const TtsRun run = synth_tts(input.text, cb, rvq, tts_cfg, cfg.seed, ClockMode::Virtual);
                cell.reference_snr.push_back(reference_snr(run.reference, run.audio));
                cell.wada_utterance.push_back(wada_snr(run.audio));
                cell.wada_chunk_mean.push_back(detail::chunk_mean_wada(run.chunks, run.audio.sample_rate_hz));
            }
            cells.push_back(std::move(cell));
        }

        for (std::size_t i = 0; i < n_rows; ++i) {
            out << input.label << ',' << kLatencyRows[i];
            for (const auto& c : cells) out << ',' << format_optional(c.latency[i], detail::kReportDecimals[i]);
            out << '\n';
        }
        auto snr_rows = [&](const char* prefix, std::vector<double> detail::SweepCell::*field) {
            for (std::size_t k = 0; k < spec.paddings.size(); ++k) {
                out << input.label << ',' << prefix << padding_row_name(spec.paddings[k], width);
                for (const auto& c : cells) out << ',' << format_fixed((c.*field)[k], 3);
                out << '\n';
            }
        };
        snr_rows("Reference SNR (dB): ", &detail::SweepCell::reference_snr);
        snr_rows("WADA SNR (dB): ", &detail::SweepCell::wada_utterance);
        snr_rows("WADA SNR chunk mean (dB): ", &detail::SweepCell::wada_chunk_mean);
    }
}

struct SweepArgs {
    ConfigFlags flags;
    SweepSpec spec;
    std::vector<std::string> texts;         // literal texts, labeled by length
    std::vector<std::string> padding_names; // empty: none, mean, concat
    std::string out_path;                   // empty: stdout
};

inline int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err,
                     const char* env_seed_value = std::getenv(kSeedEnv))
{
    return guarded(err, [&] {
        ConfigFlags flags = a.flags;
        flags.q.reset();  // the sweep owns the q axis
        flags.padding.reset();
        flags.decoder_codebooks.reset();
        const PipelineConfig cfg = resolve_config(flags, env_seed_value);
        SweepSpec spec = a.spec;
        if (!a.padding_names.empty()) {
            spec.paddings.clear();
            for (const auto& name : a.padding_names) {
                const auto p = parse_padding(name);
                if (!p) fail(ErrorKind::InvalidArgument, "unknown padding '" + name + "'");
                spec.paddings.push_back(*p);
            }
        }
        for (const auto& t : a.texts) {
            spec.inputs.push_back({std::to_string(t.size()) + " chars", t});
        }
        validate(spec, cfg.codec);
        const CodebookSet cb = load_or_train_codebooks(cfg);
        require(cb.dim() == cfg.codec.dim, "codebook dimension does not match codec.dim");
        std::ostringstream csv;
        write_sweep_csv(csv, spec, cfg, cb);
        if (a.out_path.empty()) {
            out << csv.str();
        } else {
            const std::string s = csv.str();
            write_file_bytes(a.out_path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
        }
        return kExitOk;
    });
}

// ---------------------------------------------------------------------------
// trace, snr, endpoint

inline int cmd_trace(const std::string& path, bool as_json, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        std::ifstream in(path, std::ios::binary);
        if (!in) fail(ErrorKind::Io, "cannot open trace file " + path);
        const StreamTrace t = parse_trace(in);
        const LatencyReport r = summarize(t);
        if (as_json) {
            json j = to_json(r);
            j["underruns"] = underruns_json(t);
            out << j.dump(2) << '\n';
        } else {
            write_report_csv(out, r);
            for (const auto& u : underrun_report(t)) {
                out << "underrun,chunk=" << u.chunk_index << " gap_ms=" << format_fixed(u.gap_s * 1000.0, 1) << '\n';
            }
        }
        return kExitOk;
    });
}

inline int cmd_snr(const std::string& path, const std::string& reference_path, const std::string& table_path,
                   std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const Waveform w = read_wav_file(path);
        std::optional<SnrLookupTable> custom;
        if (!table_path.empty()) {
            std::ifstream in(table_path);
            if (!in) fail(ErrorKind::Io, "cannot open table file " + table_path);
            custom = SnrLookupTable::parse(in);
        }
        const SnrLookupTable& table = custom ? *custom : SnrLookupTable::builtin();
        out << "wada_snr_db," << format_fixed(wada_snr(w, table), 3) << '\n';
        if (!reference_path.empty()) {
            out << "reference_snr_db," << format_fixed(reference_snr(read_wav_file(reference_path), w), 3) << '\n';
        }
        return kExitOk;
    });
}

inline int cmd_endpoint(const std::string& path, const ConfigFlags& flags, std::ostream& out, std::ostream& err,
                        const char* env_seed_value = std::getenv(kSeedEnv))
{
    return guarded(err, [&] {
        const PipelineConfig cfg = resolve_config(flags, env_seed_value);
        const Waveform w = read_wav_file(path);
        const auto end = find_endpoint(label_frames(w, cfg.endpoint), cfg.endpoint);
        out << (end ? format_fixed(*end, 3) : std::string("none")) << '\n';
        return kExitOk;
    });
}

// ---------------------------------------------------------------------------
// helpers for producing inputs

inline int cmd_train(const ConfigFlags& flags, const std::string& out_path, std::ostream& out, std::ostream& err,
                     const char* env_seed_value = std::getenv(kSeedEnv))
{
    return guarded(err, [&] {
        require(!out_path.empty(), "train needs --out");
        ConfigFlags f = flags;
        f.codebook_file = std::string();  // always train
        const PipelineConfig cfg = resolve_config(f, env_seed_value);
        const CodebookSet cb = train_synthetic_codebooks(cfg.codec, cfg.seed);
        write_file_bytes(out_path, save_codebooks(cb));
        out << "wrote " << cb.n_stages() << "x" << cb.codebook_size() << "x" << cb.dim() << " codebooks (seed "
            << cfg.seed << ") to " << out_path << '\n';
        return kExitOk;
    });
}

inline int cmd_gen_speech(double lead_s, double speech_s, double trail_s, std::uint64_t seed, double noise_snr_db,
                          const std::string& out_path, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        require(!out_path.empty(), "gen-speech needs --out");
        Waveform w = synthetic_utterance(lead_s, speech_s, trail_s, seed);
        if (std::isfinite(noise_snr_db)) {
            const Waveform noise = gen_white_noise(w.samples.size(), hash_combine(seed, 0x6e6f697365ULL));
            w = mix_at_snr(w, noise, noise_snr_db);
        }
        write_wav_file(out_path, w);
        out << "wrote " << format_fixed(w.duration_s(), 3) << " s to " << out_path << '\n';
        return kExitOk;
    });
}

} // namespace lava::bench
