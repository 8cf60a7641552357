#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lava/error.hpp"

namespace lava {

/// One streamed audio chunk: when it became available and how much audio it
/// holds.
struct ChunkEvent {
    double arrival_s = 0.0;
    double audio_duration_s = 0.0;

    friend bool operator==(const ChunkEvent&, const ChunkEvent&) = default;
};

/// Chunk arrivals of one generation, times relative to its start.
struct StreamTrace {
    std::vector<ChunkEvent> events;
    double generation_end_s = 0.0;

    double total_audio_s() const noexcept
    {
        double t = 0.0;
        for (const auto& e : events) {
            t += e.audio_duration_s;
        }
        return t;
    }

    friend bool operator==(const StreamTrace&, const StreamTrace&) = default;
};

inline void validate(const StreamTrace& t)
{
    double prev = 0.0;
    for (std::size_t i = 0; i < t.events.size(); ++i) {
        const auto& e = t.events[i];
        require(std::isfinite(e.arrival_s) && e.arrival_s >= 0.0,
                "event " + std::to_string(i) + ": arrival must be finite and non-negative");
        require(std::isfinite(e.audio_duration_s) && e.audio_duration_s > 0.0,
                "event " + std::to_string(i) + ": audio duration must be positive");
        require(i == 0 || e.arrival_s >= prev, "event " + std::to_string(i) + ": arrivals must be time-ordered");
        prev = e.arrival_s;
    }
    require(std::isfinite(t.generation_end_s), "generation end must be finite");
    require(t.events.empty() || t.generation_end_s >= t.events.back().arrival_s,
            "generation end precedes the last chunk arrival");
}

inline double first_chunk_latency_ms(const StreamTrace& t)
{
    require(!t.events.empty(), "empty trace has no first chunk");
    return t.events.front().arrival_s * 1000.0;
}

/// Generation time divided by the duration of audio produced.
inline double rtf(const StreamTrace& t)
{
    require(!t.events.empty(), "empty trace");
    const double audio = t.total_audio_s();
    require(audio > 0.0, "trace contains no audio");
    return t.generation_end_s / audio;
}

struct InterChunkStats {
    double avg_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
};

inline InterChunkStats inter_chunk_stats(const StreamTrace& t)
{
    require(t.events.size() >= 2, "inter-chunk statistics need at least two chunks");
    InterChunkStats s;
    s.min_ms = std::numeric_limits<double>::infinity();
    s.max_ms = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t i = 1; i < t.events.size(); ++i) {
        const double gap = (t.events[i].arrival_s - t.events[i - 1].arrival_s) * 1000.0;
        sum += gap;
        s.min_ms = std::min(s.min_ms, gap);
        s.max_ms = std::max(s.max_ms, gap);
    }
    s.avg_ms = sum / static_cast<double>(t.events.size() - 1);
    return s;
}

inline double chunks_per_second(const StreamTrace& t)
{
    require(!t.events.empty(), "trace has no chunks");
    require(t.generation_end_s > 0.0, "trace has zero duration");
    return static_cast<double>(t.events.size()) / t.generation_end_s;
}

struct Underrun {
    std::size_t chunk_index = 0;
    double gap_s = 0.0;

    friend bool operator==(const Underrun&, const Underrun&) = default;
};

/// Playback starts at the first arrival with no device buffer; chunk i
/// underruns when it arrives after the audio queued before it has played out.
inline std::vector<Underrun> underrun_report(const StreamTrace& t)
{
    require(!t.events.empty(), "empty trace");
    std::vector<Underrun> out;
    double play_end = t.events.front().arrival_s + t.events.front().audio_duration_s;
    for (std::size_t i = 1; i < t.events.size(); ++i) {
        const auto& e = t.events[i];
        if (e.arrival_s > play_end) {
            out.push_back({i, e.arrival_s - play_end});
            play_end = e.arrival_s;
        }
        play_end += e.audio_duration_s;
    }
    return out;
}

inline double round_to(double x, int decimals)
{
    const double scale = std::pow(10.0, decimals);
    return std::round(x * scale) / scale;
}

/// Every streaming metric of one trace. Inter-chunk fields are absent for
/// single-chunk traces; chunks_per_second is absent for zero-duration ones.
struct LatencyReport {
    double first_chunk_latency_ms = 0.0;
    double rtf = 0.0;
    std::size_t n_chunks = 0;
    double avg_chunk_size_ms = 0.0;
    std::optional<double> avg_inter_chunk_latency_ms;
    std::optional<double> min_inter_chunk_latency_ms;
    std::optional<double> max_inter_chunk_latency_ms;
    std::optional<double> chunks_per_second;
    std::size_t underrun_count = 0;

    friend bool operator==(const LatencyReport&, const LatencyReport&) = default;
};

/// ms to 1 d.p., RTF to 3 d.p., chunks/s to 2 d.p.
inline LatencyReport summarize(const StreamTrace& t)
{
    validate(t);
    require(!t.events.empty(), "cannot summarize an empty trace");
    LatencyReport r;
    r.first_chunk_latency_ms = round_to(first_chunk_latency_ms(t), 1);
    r.rtf = round_to(rtf(t), 3);
    r.n_chunks = t.events.size();
    r.avg_chunk_size_ms = round_to(t.total_audio_s() * 1000.0 / static_cast<double>(t.events.size()), 1);
    if (t.events.size() >= 2) {
        const auto s = inter_chunk_stats(t);
        r.avg_inter_chunk_latency_ms = round_to(s.avg_ms, 1);
        r.min_inter_chunk_latency_ms = round_to(s.min_ms, 1);
        r.max_inter_chunk_latency_ms = round_to(s.max_ms, 1);
    }
    if (t.generation_end_s > 0.0) {
        r.chunks_per_second = round_to(chunks_per_second(t), 2);
    }
    r.underrun_count = underrun_report(t).size();
    return r;
}

// Row labels of the RVQ-iteration tables, in order.
inline constexpr const char* kRowFirstChunk = "First Chunk Latency (ms)";
inline constexpr const char* kRowRtf = "Real-Time Factor (RTF)";
inline constexpr const char* kRowChunks = "Number of Chunks";
inline constexpr const char* kRowChunkSize = "Avg. Chunk Size";
inline constexpr const char* kRowAvgInter = "Avg. Inter-Chunk Latency (ms)";
inline constexpr const char* kRowMinInter = "Min Inter-Chunk Latency (ms)";
inline constexpr const char* kRowMaxInter = "Max Inter-Chunk Latency (ms)";
inline constexpr const char* kRowChunksPerSecond = "Chunks per Second";
inline constexpr const char* kRowUnderruns = "Underrun Count";

inline std::string format_fixed(double v, int decimals)
{
    // Values that print as zero are written without a sign.
    if (std::abs(v) < 0.5 * std::pow(10.0, -decimals)) {
        v = 0.0;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string format_optional(const std::optional<double>& v, int decimals)
{
    return v ? format_fixed(*v, decimals) : std::string();
}

/// (label, formatted value) rows; absent values are empty strings.
inline std::vector<std::pair<std::string, std::string>> report_rows(const LatencyReport& r)
{
    return {
        {kRowFirstChunk, format_fixed(r.first_chunk_latency_ms, 1)},
        {kRowRtf, format_fixed(r.rtf, 3)},
        {kRowChunks, std::to_string(r.n_chunks)},
        {kRowChunkSize, format_fixed(r.avg_chunk_size_ms, 1)},
        {kRowAvgInter, format_optional(r.avg_inter_chunk_latency_ms, 1)},
        {kRowMinInter, format_optional(r.min_inter_chunk_latency_ms, 1)},
        {kRowMaxInter, format_optional(r.max_inter_chunk_latency_ms, 1)},
        {kRowChunksPerSecond, format_optional(r.chunks_per_second, 2)},
        {kRowUnderruns, std::to_string(r.underrun_count)},
    };
}

inline void write_report_csv(std::ostream& out, const LatencyReport& r)
{
    out << "Metric,Value\n";
    for (const auto& [label, value] : report_rows(r)) {
        out << label << ',' << value << '\n';
    }
}

inline std::string format_exact(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// "# generation_end_s=<v>" then one "arrival_s audio_duration_s" line per
/// event. Values are written with 17 significant digits so parsing restores
/// them exactly.
inline void write_trace(std::ostream& out, const StreamTrace& t)
{
    out << "# generation_end_s=" << format_exact(t.generation_end_s) << '\n';
    for (const auto& e : t.events) {
        out << format_exact(e.arrival_s) << ' ' << format_exact(e.audio_duration_s) << '\n';
    }
}

inline StreamTrace parse_trace(std::istream& in)
{
    StreamTrace t;
    bool have_end = false;
    std::string line;
    std::size_t line_no = 0;
    auto bad = [&](const std::string& why) {
        fail(ErrorKind::Format, "trace line " + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) {
            continue;
        }
        if (line[first] == '#') {
            const std::string key = "generation_end_s=";
            const auto at = line.find(key);
            if (at == std::string::npos) {
                continue;
            }
            std::istringstream v(line.substr(at + key.size()));
            double end = 0.0;
            std::string extra;
            if (!(v >> end) || (v >> extra) || !std::isfinite(end)) {
                bad("malformed generation_end_s header");
            }
            t.generation_end_s = end;
            have_end = true;
            continue;
        }
        std::istringstream fields(line);
        ChunkEvent e;
        std::string extra;
        if (!(fields >> e.arrival_s >> e.audio_duration_s) || (fields >> extra)) {
            bad("expected \"arrival_s audio_duration_s\"");
        }
        if (!std::isfinite(e.arrival_s) || e.arrival_s < 0.0) {
            bad("arrival must be finite and non-negative");
        }
        if (!std::isfinite(e.audio_duration_s) || e.audio_duration_s <= 0.0) {
            bad("audio duration must be positive");
        }
        if (!t.events.empty() && e.arrival_s < t.events.back().arrival_s) {
            bad("arrivals must be time-ordered");
        }
        t.events.push_back(e);
    }
    if (!have_end) {
        fail(ErrorKind::Format, "trace is missing the \"# generation_end_s=<v>\" header");
    }
    try {
        validate(t);
    } catch (const Error& e) {
        fail(ErrorKind::Format, std::string("trace: ") + e.what());
    }
    return t;
}

} // namespace lava
