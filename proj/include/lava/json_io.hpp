#pragma once

#include <initializer_list>
#include <set>
#include <string>

#include "json.hpp"
#include "lava/error.hpp"
#include "lava/latency.hpp"
#include "lava/pipeline.hpp"

namespace lava {

using json = nlohmann::json;

namespace detail {

// Typed field access with JSON-pointer-style paths in every error message.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) {
            bad(path_.empty() ? "/" : path_, "must be an object");
        }
    }

    [[noreturn]] static void bad(const std::string& path, const std::string& why)
    {
        fail(ErrorKind::InvalidArgument, "config " + path + ": " + why);
    }

    std::string at(const char* key) const { return path_ + "/" + key; }

    const json* find(const char* key)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const char* key, double& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_number()) bad(at(key), "must be a number");
            out = v->get<double>();
        }
    }

    void count(const char* key, std::size_t& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_number_integer() || v->get<long long>() < 0) bad(at(key), "must be a non-negative integer");
            out = v->get<std::size_t>();
        }
    }

    void seed(const char* key, std::uint64_t& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0)) {
                bad(at(key), "must be a non-negative integer");
            }
            out = v->get<std::uint64_t>();
        }
    }

    void boolean(const char* key, bool& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) bad(at(key), "must be true or false");
            out = v->get<bool>();
        }
    }

    void string(const char* key, std::string& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_string()) bad(at(key), "must be a string");
            out = v->get<std::string>();
        }
    }

    template <typename Parse, typename T>
    void choice(const char* key, T& out, Parse parse, const char* allowed)
    {
        if (const json* v = find(key)) {
            if (!v->is_string()) bad(at(key), std::string("must be one of ") + allowed);
            const auto parsed = parse(v->get<std::string>());
            if (!parsed) bad(at(key), std::string("must be one of ") + allowed);
            out = *parsed;
        }
    }

    void finish() const
    {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) {
                bad(path_ + "/" + key, "unknown field");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void read_latency_fields(ObjectReader& r, LatencyModel& m)
{
    r.number("fixed_s", m.fixed_s);
    r.number("per_unit_s", m.per_unit_s);
    r.count("warmup_runs", m.warmup_runs);
    r.number("warmup_s", m.warmup_s);
}

inline LatencyModel parse_latency_model(const json& j, const std::string& path, LatencyModel base)
{
    ObjectReader r(j, path);
    read_latency_fields(r, base);
    r.finish();
    return base;
}

inline ModeOverride parse_override(const json& j, const std::string& path, const PipelineConfig& base)
{
    ObjectReader r(j, path);
    ModeOverride o;
    if (const json* v = r.find("asr")) o.asr = parse_latency_model(*v, r.at("asr"), base.asr);
    if (const json* v = r.find("llm")) o.llm = parse_latency_model(*v, r.at("llm"), base.llm);
    if (const json* v = r.find("tts")) o.tts = parse_latency_model(*v, r.at("tts"), base.tts);
    r.finish();
    return o;
}

// Re-throws validation failures with the path of the offending section.
template <typename F>
void check_section(const std::string& path, F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        ObjectReader::bad(path, e.what());
    }
}

} // namespace detail

/// Builds a PipelineConfig from its JSON document. Missing fields keep their
/// defaults; unknown fields and type errors are rejected with the field path.
inline PipelineConfig parse_pipeline_config(const json& j)
{
    using detail::ObjectReader;
    PipelineConfig cfg;
    ObjectReader r(j, "");
    r.choice("mode", cfg.mode, parse_mode, "\"oneshot\", \"streaming\"");
    r.choice("clock", cfg.clock, parse_clock, "\"virtual\", \"wall\"");
    r.count("flush_every_tokens", cfg.flush_every_tokens);
    r.seed("seed", cfg.seed);
    r.boolean("cold_start", cfg.cold_start);
    if (const json* v = r.find("context")) {
        if (!v->is_array()) ObjectReader::bad("/context", "must be an array of strings");
        for (std::size_t i = 0; i < v->size(); ++i) {
            if (!(*v)[i].is_string()) ObjectReader::bad("/context/" + std::to_string(i), "must be a string");
            cfg.context.push_back((*v)[i].get<std::string>());
        }
    }
    if (const json* v = r.find("rvq")) {
        ObjectReader s(*v, "/rvq");
        s.count("q_iterations", cfg.rvq.q_iterations);
        s.count("decoder_codebooks", cfg.rvq.decoder_codebooks);
        s.choice("padding", cfg.rvq.padding, parse_padding, "\"none\", \"mean\", \"concat\"");
        s.finish();
    }
    if (const json* v = r.find("codec")) {
        ObjectReader s(*v, "/codec");
        s.count("n_stages", cfg.codec.n_stages);
        s.count("codebook_size", cfg.codec.codebook_size);
        s.count("dim", cfg.codec.dim);
        s.count("train_frames", cfg.codec.train_frames);
        s.string("codebook_file", cfg.codebook_file);
        s.finish();
    }
    if (const json* v = r.find("endpoint")) {
        ObjectReader s(*v, "/endpoint");
        s.number("frame_ms", cfg.endpoint.frame_ms);
        s.number("energy_threshold_db", cfg.endpoint.energy_threshold_db);
        s.number("silence_window_s", cfg.endpoint.silence_window_s);
        s.count("noise_floor_frames", cfg.endpoint.noise_floor_frames);
        s.number("max_noise_floor_dbfs", cfg.endpoint.max_noise_floor_dbfs);
        s.finish();
    }
    if (const json* v = r.find("asr")) {
        cfg.asr = detail::parse_latency_model(*v, "/asr", cfg.asr);
    }
    if (const json* v = r.find("llm")) {
        ObjectReader s(*v, "/llm");
        detail::read_latency_fields(s, cfg.llm);
        s.count("response_tokens", cfg.response_tokens);
        s.boolean("stream_capable", cfg.llm_stream_capable);
        s.finish();
    }
    if (const json* v = r.find("tts")) {
        ObjectReader s(*v, "/tts");
        detail::read_latency_fields(s, cfg.tts);
        s.count("chunk_frames", cfg.chunk_frames);
        s.count("frames_per_char", cfg.frames_per_char);
        s.finish();
    }
    if (const json* v = r.find("overrides")) {
        ObjectReader s(*v, "/overrides");
        if (const json* o = s.find("oneshot")) cfg.oneshot_override = detail::parse_override(*o, "/overrides/oneshot", cfg);
        if (const json* o = s.find("streaming")) cfg.streaming_override = detail::parse_override(*o, "/overrides/streaming", cfg);
        s.finish();
    }
    r.finish();

    detail::check_section("/rvq", [&] { validate(cfg.rvq); });
    detail::check_section("/rvq/decoder_codebooks", [&] {
        require(cfg.rvq.decoder_codebooks <= cfg.codec.n_stages, "exceeds codec n_stages");
    });
    detail::check_section("/codec", [&] {
        require(cfg.codec.n_stages >= 1 && cfg.codec.codebook_size >= 2 && cfg.codec.dim >= 1,
                "needs n_stages >= 1, codebook_size >= 2, dim >= 1");
        require(cfg.codec.train_frames >= cfg.codec.codebook_size, "train_frames must be at least codebook_size");
    });
    detail::check_section("/endpoint", [&] { validate(cfg.endpoint); });
    detail::check_section("/asr", [&] { validate(cfg.asr); });
    detail::check_section("/llm", [&] { validate(cfg.llm); });
    detail::check_section("/tts", [&] { validate(cfg.tts); });
    for (auto m : {PipelineMode::OneShot, PipelineMode::Streaming}) {
        const std::string path = std::string("/overrides/") + to_string(m);
        detail::check_section(path, [&] {
            const PipelineConfig resolved = cfg.for_mode(m);
            validate(resolved.asr);
            validate(resolved.llm);
            validate(resolved.tts);
        });
    }
    detail::check_section("/flush_every_tokens", [&] { require(cfg.flush_every_tokens >= 1, "must be at least 1"); });
    detail::check_section("/tts", [&] {
        require(cfg.chunk_frames >= 1, "chunk_frames must be positive");
        require(cfg.frames_per_char >= 1, "frames_per_char must be positive");
    });
    detail::check_section("/mode", [&] {
        require(cfg.mode != PipelineMode::Streaming || cfg.llm_stream_capable,
                "streaming requires a stream-capable LLM (llm.stream_capable)");
    });
    return cfg;
}

inline PipelineConfig parse_pipeline_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
    }
    return parse_pipeline_config(j);
}

inline PipelineConfig parse_pipeline_config(const char* text) { return parse_pipeline_config(std::string(text)); }

inline json to_json(const LatencyModel& m)
{
    return {{"fixed_s", m.fixed_s}, {"per_unit_s", m.per_unit_s}, {"warmup_runs", m.warmup_runs}, {"warmup_s", m.warmup_s}};
}

/// Full config with every default spelled out.
inline json to_json(const PipelineConfig& c)
{
    json j;
    j["mode"] = to_string(c.mode);
    j["clock"] = to_string(c.clock);
    j["flush_every_tokens"] = c.flush_every_tokens;
    j["seed"] = c.seed;
    j["cold_start"] = c.cold_start;
    j["context"] = c.context;
    j["rvq"] = {{"q_iterations", c.rvq.q_iterations},
                {"decoder_codebooks", c.rvq.decoder_codebooks},
                {"padding", to_string(c.rvq.padding)}};
    j["codec"] = {{"n_stages", c.codec.n_stages},
                  {"codebook_size", c.codec.codebook_size},
                  {"dim", c.codec.dim},
                  {"train_frames", c.codec.train_frames},
                  {"codebook_file", c.codebook_file}};
    j["endpoint"] = {{"frame_ms", c.endpoint.frame_ms},
                     {"energy_threshold_db", c.endpoint.energy_threshold_db},
                     {"silence_window_s", c.endpoint.silence_window_s},
                     {"noise_floor_frames", c.endpoint.noise_floor_frames},
                     {"max_noise_floor_dbfs", c.endpoint.max_noise_floor_dbfs}};
    j["asr"] = to_json(c.asr);
    j["llm"] = to_json(c.llm);
    j["llm"]["response_tokens"] = c.response_tokens;
    j["llm"]["stream_capable"] = c.llm_stream_capable;
    j["tts"] = to_json(c.tts);
    j["tts"]["chunk_frames"] = c.chunk_frames;
    j["tts"]["frames_per_char"] = c.frames_per_char;
    json overrides = json::object();
    for (auto m : {PipelineMode::OneShot, PipelineMode::Streaming}) {
        const ModeOverride& o = m == PipelineMode::OneShot ? c.oneshot_override : c.streaming_override;
        json oj = json::object();
        if (o.asr) oj["asr"] = to_json(*o.asr);
        if (o.llm) oj["llm"] = to_json(*o.llm);
        if (o.tts) oj["tts"] = to_json(*o.tts);
        if (!oj.empty()) overrides[to_string(m)] = oj;
    }
    j["overrides"] = overrides;
    return j;
}

/// Profile seconds rounded to 4 d.p.
inline json to_json(const TimeProfile& p)
{
    return {{"asr_s", round_to(p.asr_s, 4)},
            {"llm_s", round_to(p.llm_s, 4)},
            {"tts_s", round_to(p.tts_s, 4)},
            {"total_s", round_to(p.total_s, 4)}};
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const LatencyReport& r)
{
    return {{"first_chunk_latency_ms", r.first_chunk_latency_ms},
            {"rtf", r.rtf},
            {"n_chunks", r.n_chunks},
            {"avg_chunk_size_ms", r.avg_chunk_size_ms},
            {"avg_inter_chunk_latency_ms", optional_json(r.avg_inter_chunk_latency_ms)},
            {"min_inter_chunk_latency_ms", optional_json(r.min_inter_chunk_latency_ms)},
            {"max_inter_chunk_latency_ms", optional_json(r.max_inter_chunk_latency_ms)},
            {"chunks_per_second", optional_json(r.chunks_per_second)},
            {"underrun_count", r.underrun_count}};
}

inline LatencyReport report_from_json(const json& j)
{
    auto opt = [&](const char* k) -> std::optional<double> {
        const auto& v = j.at(k);
        return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
    };
    LatencyReport r;
    r.first_chunk_latency_ms = j.at("first_chunk_latency_ms").get<double>();
    r.rtf = j.at("rtf").get<double>();
    r.n_chunks = j.at("n_chunks").get<std::size_t>();
    r.avg_chunk_size_ms = j.at("avg_chunk_size_ms").get<double>();
    r.avg_inter_chunk_latency_ms = opt("avg_inter_chunk_latency_ms");
    r.min_inter_chunk_latency_ms = opt("min_inter_chunk_latency_ms");
    r.max_inter_chunk_latency_ms = opt("max_inter_chunk_latency_ms");
    r.chunks_per_second = opt("chunks_per_second");
    r.underrun_count = j.at("underrun_count").get<std::size_t>();
    return r;
}

inline json underruns_json(const StreamTrace& t)
{
    json out = json::array();
    for (const auto& u : underrun_report(t)) {
        out.push_back({{"chunk_index", u.chunk_index}, {"gap_s", round_to(u.gap_s, 6)}});
    }
    return out;
}

inline json to_json(const PipelineResult& r)
{
    json j;
    j["mode"] = to_string(r.mode);
    j["endpoint_s"] = round_to(r.endpoint_s, 3);
    j["endpoint_at_stream_end"] = r.endpoint_at_stream_end;
    j["transcript"] = r.transcript;
    j["response"] = r.response;
    j["n_segments"] = r.segments.size();
    j["profile"] = to_json(r.profile);
    j["report"] = to_json(summarize(r.trace));
    j["underruns"] = underruns_json(r.trace);
    return j;
}

} // namespace lava
