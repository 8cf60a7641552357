#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lava/error.hpp"
#include "lava/rng.hpp"

namespace lava {

/// Row-major matrix of D-dimensional real frames.
struct Frames {
    std::size_t dim = 0;
    std::vector<double> values;

    Frames() = default;
    explicit Frames(std::size_t d) : dim(d) {}
    Frames(std::size_t d, std::vector<double> v) : dim(d), values(std::move(v))
    {
        require(d > 0, "frame dimension must be positive");
        require(values.size() % d == 0, "frame data is not a whole number of frames");
    }

    std::size_t size() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
    bool empty() const noexcept { return values.empty(); }

    std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
    std::span<double> row(std::size_t i) { return {values.data() + i * dim, dim}; }

    void push_back(std::span<const double> frame)
    {
        require(frame.size() == dim, "frame dimension mismatch");
        values.insert(values.end(), frame.begin(), frame.end());
    }

    friend bool operator==(const Frames&, const Frames&) = default;
};

/// Per-stage codebooks: n_stages x codebook_size vectors of dimension dim.
class CodebookSet {
public:
    CodebookSet() = default;

    CodebookSet(std::size_t n_stages, std::size_t codebook_size, std::size_t dim, std::vector<double> vectors)
        : n_stages_(n_stages), codebook_size_(codebook_size), dim_(dim), vectors_(std::move(vectors))
    {
        require(n_stages >= 1, "codebook set needs at least one stage");
        require(codebook_size >= 2, "codebook size must be at least 2");
        require(dim >= 1, "codebook dimension must be at least 1");
        require(vectors_.size() == n_stages * codebook_size * dim, "codebook data size mismatch");
        for (double v : vectors_) {
            require(std::isfinite(v), "codebook contains a non-finite value");
        }
    }

    static CodebookSet zeros(std::size_t n_stages, std::size_t codebook_size, std::size_t dim)
    {
        return {n_stages, codebook_size, dim, std::vector<double>(n_stages * codebook_size * dim, 0.0)};
    }

    std::size_t n_stages() const noexcept { return n_stages_; }
    std::size_t codebook_size() const noexcept { return codebook_size_; }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<double>& data() const noexcept { return vectors_; }

    std::span<const double> centroid(std::size_t stage, std::size_t index) const
    {
        return {vectors_.data() + (stage * codebook_size_ + index) * dim_, dim_};
    }

    std::span<double> centroid(std::size_t stage, std::size_t index)
    {
        return {vectors_.data() + (stage * codebook_size_ + index) * dim_, dim_};
    }

    friend bool operator==(const CodebookSet&, const CodebookSet&) = default;

private:
    std::size_t n_stages_ = 0;
    std::size_t codebook_size_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> vectors_;
};

using Index = std::uint32_t;

enum class Padding { None, Mean, Concat };

inline const char* to_string(Padding p)
{
    switch (p) {
    case Padding::None: return "none";
    case Padding::Mean: return "mean";
    case Padding::Concat: return "concat";
    }
    return "none";
}

inline std::optional<Padding> parse_padding(std::string_view s)
{
    if (s == "none") return Padding::None;
    if (s == "mean") return Padding::Mean;
    if (s == "concat") return Padding::Concat;
    return std::nullopt;
}

/// How many stages to quantize and how wide the decoder expects codes to be.
struct RvqConfig {
    std::size_t q_iterations = 32;
    std::size_t decoder_codebooks = 32;
    Padding padding = Padding::None;

    friend bool operator==(const RvqConfig&, const RvqConfig&) = default;
};

/// Checks the config invariants; when codebooks are given also checks the
/// widths against the trained stage count.
inline void validate(const RvqConfig& cfg, const CodebookSet* codebooks = nullptr)
{
    require(cfg.q_iterations >= 1, "q_iterations must be at least 1");
    require(cfg.q_iterations <= cfg.decoder_codebooks, "q_iterations must not exceed decoder_codebooks");
    require((cfg.padding == Padding::None) == (cfg.decoder_codebooks == cfg.q_iterations),
            "padding must be none exactly when decoder_codebooks equals q_iterations");
    if (codebooks != nullptr) {
        require(cfg.decoder_codebooks <= codebooks->n_stages(),
                "decoder_codebooks (" + std::to_string(cfg.decoder_codebooks) + ") exceeds trained stages ("
                    + std::to_string(codebooks->n_stages()) + ")");
    }
}

/// Codes for a run of frames: n_frames rows of `width` indices, of which the
/// first q came from quantization and the rest from padding.
struct RvqCode {
    std::size_t q = 0;
    std::size_t width = 0;
    std::vector<Index> indices;

    std::size_t n_frames() const noexcept { return width == 0 ? 0 : indices.size() / width; }
    std::span<const Index> row(std::size_t i) const { return {indices.data() + i * width, width}; }

    friend bool operator==(const RvqCode&, const RvqCode&) = default;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

/// Nearest entry of one stage; ties go to the lowest index.
inline Index nearest_centroid(std::span<const double> x, const CodebookSet& cb, std::size_t stage)
{
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cb.codebook_size(); ++k) {
        const double d = squared_distance(x, cb.centroid(stage, k));
        if (d < best_d) {
            best_d = d;
            best = static_cast<Index>(k);
        }
    }
    return best;
}

/// Greedy residual quantization through the first q stages.
inline std::vector<Index> encode_frame(std::span<const double> frame, const CodebookSet& cb, std::size_t q)
{
    require(frame.size() == cb.dim(), "frame dimension " + std::to_string(frame.size())
                                           + " does not match codebook dimension " + std::to_string(cb.dim()));
    require(q >= 1 && q <= cb.n_stages(), "q must be in [1, n_stages]");

    std::vector<double> residual(frame.begin(), frame.end());
    std::vector<Index> out(q);
    for (std::size_t s = 0; s < q; ++s) {
        const Index k = nearest_centroid(residual, cb, s);
        out[s] = k;
        const auto c = cb.centroid(s, k);
        for (std::size_t d = 0; d < residual.size(); ++d) {
            residual[d] -= c[d];
        }
    }
    return out;
}

/// Sum of the selected entry of each stage, stage s using indices[s].
inline std::vector<double> decode_frame(std::span<const Index> indices, const CodebookSet& cb)
{
    require(!indices.empty() && indices.size() <= cb.n_stages(), "code width must be in [1, n_stages]");
    std::vector<double> out(cb.dim(), 0.0);
    for (std::size_t s = 0; s < indices.size(); ++s) {
        require(indices[s] < cb.codebook_size(),
                "index " + std::to_string(indices[s]) + " out of range at stage " + std::to_string(s));
        const auto c = cb.centroid(s, indices[s]);
        for (std::size_t d = 0; d < out.size(); ++d) {
            out[d] += c[d];
        }
    }
    return out;
}

/// Widens a code to target_len. The first entries are kept verbatim; mean
/// padding appends round-half-up(mean of the input) clamped below
/// codebook_size, concat padding repeats the input cyclically.
inline std::vector<Index> pad_indices(std::span<const Index> indices, std::size_t target_len, Padding strategy,
                                      std::optional<std::size_t> codebook_size = std::nullopt)
{
    require(!indices.empty(), "cannot pad an empty code");
    require(indices.size() <= target_len, "target length shorter than the code");
    std::vector<Index> out(indices.begin(), indices.end());
    if (indices.size() == target_len) {
        return out;
    }
    out.reserve(target_len);
    switch (strategy) {
    case Padding::Mean: {
        std::uint64_t sum = 0;
        for (Index i : indices) {
            sum += i;
        }
        const std::uint64_t q = indices.size();
        std::uint64_t fill = (2 * sum + q) / (2 * q);
        if (codebook_size && fill >= *codebook_size) {
            fill = *codebook_size - 1;
        }
        out.resize(target_len, static_cast<Index>(fill));
        break;
    }
    case Padding::Concat:
        for (std::size_t i = indices.size(); i < target_len; ++i) {
            out.push_back(indices[i % indices.size()]);
        }
        break;
    case Padding::None:
        fail(ErrorKind::InvalidArgument, "padding strategy none cannot widen a code");
    }
    return out;
}

inline RvqCode encode(const Frames& frames, const CodebookSet& cb, const RvqConfig& cfg)
{
    validate(cfg, &cb);
    require(frames.dim == cb.dim(), "frame dimension does not match codebooks");
    RvqCode code;
    code.q = cfg.q_iterations;
    code.width = cfg.decoder_codebooks;
    code.indices.reserve(frames.size() * code.width);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto idx = encode_frame(frames.row(i), cb, cfg.q_iterations);
        if (cfg.padding == Padding::None) {
            code.indices.insert(code.indices.end(), idx.begin(), idx.end());
        } else {
            const auto padded = pad_indices(idx, cfg.decoder_codebooks, cfg.padding, cb.codebook_size());
            code.indices.insert(code.indices.end(), padded.begin(), padded.end());
        }
    }
    return code;
}

inline Frames decode(const RvqCode& code, const CodebookSet& cb)
{
    require(code.width >= 1 && code.indices.size() % code.width == 0, "malformed code matrix");
    Frames out(cb.dim());
    out.values.reserve(code.n_frames() * cb.dim());
    for (std::size_t i = 0; i < code.n_frames(); ++i) {
        const auto v = decode_frame(code.row(i), cb);
        out.values.insert(out.values.end(), v.begin(), v.end());
    }
    return out;
}

/// Reported in place of +inf dB on exact reconstruction; also the ceiling.
inline constexpr double kSnrSentinelDb = 200.0;

/// 10 log10(signal energy / error energy), capped at kSnrSentinelDb.
inline double snr_from_energies(double signal_energy, double error_energy)
{
    require(signal_energy > 0.0, "reference has zero power");
    if (error_energy <= 0.0) {
        return kSnrSentinelDb;
    }
    return std::min(kSnrSentinelDb, 10.0 * std::log10(signal_energy / error_energy));
}

inline double reconstruction_snr_db(const Frames& frames, const CodebookSet& cb, const RvqConfig& cfg)
{
    require(!frames.empty(), "no frames");
    const Frames decoded = decode(encode(frames, cb, cfg), cb);
    double sig = 0.0;
    double err = 0.0;
    for (std::size_t i = 0; i < frames.values.size(); ++i) {
        const double x = frames.values[i];
        const double e = x - decoded.values[i];
        sig += x * x;
        err += e * e;
    }
    return snr_from_energies(sig, err);
}

namespace detail {

// k-means++ seeding followed by at most `iterations` Lloyd steps. Clusters
// that lose all members are re-seeded from the point farthest from its
// current centroid.
inline std::vector<double> kmeans(const Frames& pts, std::size_t k, std::size_t iterations, SplitMix64& rng)
{
    const std::size_t n = pts.size();
    const std::size_t dim = pts.dim;
    std::vector<double> centers(k * dim);
    auto center = [&](std::size_t c) { return std::span<double>(centers.data() + c * dim, dim); };
    auto set_center = [&](std::size_t c, std::span<const double> p) { std::copy(p.begin(), p.end(), center(c).begin()); };

    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    set_center(0, pts.row(rng.below(n)));
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(pts.row(i), center(c - 1)));
            total += d2[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) {
                    continue;
                }
                target -= d2[i];
                if (target < 0.0) {
                    pick = i;
                    break;
                }
            }
            // Rounding can walk past the last positive weight.
            while (d2[pick] <= 0.0 && pick > 0) {
                --pick;
            }
        } else {
            pick = rng.below(n);
        }
        set_center(c, pts.row(pick));
    }

    std::vector<std::size_t> assign(n, 0);
    std::vector<double> dist(n, 0.0);
    std::vector<double> sums(k * dim);
    std::vector<std::size_t> counts(k);
    for (std::size_t it = 0; it < iterations; ++it) {
        bool changed = it == 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = squared_distance(pts.row(i), center(c));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            changed = changed || assign[i] != best;
            assign[i] = best;
            dist[i] = best_d;
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto p = pts.row(i);
            for (std::size_t d = 0; d < dim; ++d) {
                sums[assign[i] * dim + d] += p[d];
            }
            ++counts[assign[i]];
        }
        bool reseeded = false;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                std::size_t far = 0;
                for (std::size_t i = 1; i < n; ++i) {
                    if (dist[i] > dist[far]) {
                        far = i;
                    }
                }
                set_center(c, pts.row(far));
                dist[far] = 0.0;
                reseeded = true;
                continue;
            }
            for (std::size_t d = 0; d < dim; ++d) {
                centers[c * dim + d] = sums[c * dim + d] / static_cast<double>(counts[c]);
            }
        }
        // Unchanged assignments with no re-seeding is a fixed point.
        if (!changed && !reseeded) {
            break;
        }
    }
    return centers;
}

} // namespace detail

inline constexpr std::size_t kLloydIterations = 25;

/// Stage-wise k-means on successive residuals.
inline CodebookSet train_codebooks(const Frames& frames, std::size_t n_stages, std::size_t codebook_size,
                                   std::uint64_t seed)
{
    require(frames.dim >= 1, "frame dimension must be positive");
    require(n_stages >= 1, "need at least one stage");
    require(codebook_size >= 2, "codebook size must be at least 2");
    require(frames.size() >= codebook_size, "need at least codebook_size frames to train ("
                                                + std::to_string(frames.size()) + " < "
                                                + std::to_string(codebook_size) + ")");
    for (double v : frames.values) {
        require(std::isfinite(v), "training frames contain a non-finite value");
    }

    const std::size_t dim = frames.dim;
    SplitMix64 rng(seed);
    Frames residual = frames;
    std::vector<double> all;
    all.reserve(n_stages * codebook_size * dim);
    for (std::size_t s = 0; s < n_stages; ++s) {
        const auto centers = detail::kmeans(residual, codebook_size, kLloydIterations, rng);
        const CodebookSet stage(1, codebook_size, dim, centers);
        for (std::size_t i = 0; i < residual.size(); ++i) {
            auto r = residual.row(i);
            const auto c = stage.centroid(0, nearest_centroid(r, stage, 0));
            for (std::size_t d = 0; d < dim; ++d) {
                r[d] -= c[d];
            }
        }
        all.insert(all.end(), centers.begin(), centers.end());
    }
    return {n_stages, codebook_size, dim, std::move(all)};
}

// Persistence: "LAVARVQ\0" magic, u32 format version, u32 n_stages, u32 K,
// u32 D, then n_stages*K*D IEEE-754 doubles, all little-endian, row-major.
inline constexpr char kCodebookMagic[8] = {'L', 'A', 'V', 'A', 'R', 'V', 'Q', '\0'};
inline constexpr std::uint32_t kCodebookFormatVersion = 1;

inline std::vector<std::uint8_t> save_codebooks(const CodebookSet& cb)
{
    std::vector<std::uint8_t> out(kCodebookMagic, kCodebookMagic + 8);
    auto put32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    put32(kCodebookFormatVersion);
    put32(static_cast<std::uint32_t>(cb.n_stages()));
    put32(static_cast<std::uint32_t>(cb.codebook_size()));
    put32(static_cast<std::uint32_t>(cb.dim()));
    for (double v : cb.data()) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, sizeof bits);
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
    return out;
}

inline CodebookSet load_codebooks(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 24 || std::memcmp(bytes.data(), kCodebookMagic, 8) != 0) {
        fail(ErrorKind::Format, "not a codebook file (bad magic)");
    }
    auto get32 = [&](std::size_t at) {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
        return v;
    };
    if (get32(8) != kCodebookFormatVersion) {
        fail(ErrorKind::Unsupported, "unsupported codebook format version " + std::to_string(get32(8)));
    }
    const std::uint64_t stages = get32(12);
    const std::uint64_t k = get32(16);
    const std::uint64_t dim = get32(20);
    const std::uint64_t count = stages * k * dim;
    if (stages == 0 || k < 2 || dim == 0 || count > (bytes.size() - 24) / 8 || bytes.size() != 24 + count * 8) {
        fail(ErrorKind::Format, "codebook file size does not match its header");
    }
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[24 + 8 * i + b]) << (8 * b);
        std::memcpy(&values[i], &bits, sizeof bits);
    }
    try {
        return {stages, k, dim, std::move(values)};
    } catch (const Error& e) {
        fail(ErrorKind::Format, std::string("invalid codebook contents: ") + e.what());
    }
}

} // namespace lava
