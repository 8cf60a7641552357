#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <thread>
#include <vector>

#include "lava/rvq.hpp"
#include "test_util.hpp"

using namespace lava;

namespace {

Frames random_frames(std::size_t n, std::size_t dim, std::uint64_t seed, double scale = 1.0)
{
    SplitMix64 rng(seed);
    Frames f(dim);
    for (std::size_t i = 0; i < n * dim; ++i) f.values.push_back(scale * rng.normal());
    return f;
}

CodebookSet random_codebooks(std::size_t stages, std::size_t k, std::size_t dim, std::uint64_t seed)
{
    SplitMix64 rng(seed);
    std::vector<double> v(stages * k * dim);
    // Small integer grid values make exact distance ties common.
    for (auto& x : v) x = static_cast<double>(static_cast<int>(rng.below(5)) - 2);
    return {stages, k, dim, v};
}

// Exhaustive per-stage search written independently of nearest_centroid.
std::vector<Index> brute_force_encode(std::span<const double> frame, const CodebookSet& cb, std::size_t q)
{
    std::vector<double> r(frame.begin(), frame.end());
    std::vector<Index> out;
    for (std::size_t s = 0; s < q; ++s) {
        double best = std::numeric_limits<double>::infinity();
        Index best_i = 0;
        for (std::size_t k = 0; k < cb.codebook_size(); ++k) {
            double d = 0.0;
            for (std::size_t j = 0; j < r.size(); ++j) {
                const double e = r[j] - cb.data()[(s * cb.codebook_size() + k) * cb.dim() + j];
                d += e * e;
            }
            if (d < best) {
                best = d;
                best_i = static_cast<Index>(k);
            }
        }
        out.push_back(best_i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] -= cb.data()[(s * cb.codebook_size() + best_i) * cb.dim() + j];
    }
    return out;
}

double norm2(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

} // namespace

TEST(CodebookSet, ShapeValidation)
{
    EXPECT_ERROR_KIND(CodebookSet(0, 2, 1, {}), ErrorKind::InvalidArgument);
    EXPECT_ERROR_KIND(CodebookSet(1, 1, 1, {0.0}), ErrorKind::InvalidArgument);
    EXPECT_ERROR_KIND(CodebookSet(1, 2, 1, {0.0}), ErrorKind::InvalidArgument);
    EXPECT_ERROR_KIND(CodebookSet(1, 2, 1, {0.0, NAN}), ErrorKind::InvalidArgument);
    EXPECT_NO_THROW(CodebookSet(1, 2, 1, {0.0, 1.0}));
}

TEST(RvqConfig, Invariants)
{
    EXPECT_NO_THROW(validate(RvqConfig{16, 16, Padding::None}));
    EXPECT_NO_THROW(validate(RvqConfig{16, 32, Padding::Mean}));
    EXPECT_ERROR_KIND(validate(RvqConfig{16, 32, Padding::None}), ErrorKind::InvalidArgument);
    EXPECT_ERROR_KIND(validate(RvqConfig{16, 16, Padding::Concat}), ErrorKind::InvalidArgument);
    EXPECT_ERROR_KIND(validate(RvqConfig{32, 16, Padding::Mean}), ErrorKind::InvalidArgument);
    EXPECT_ERROR_KIND(validate(RvqConfig{0, 0, Padding::None}), ErrorKind::InvalidArgument);
    const auto cb = CodebookSet::zeros(8, 2, 1);
    EXPECT_ERROR_KIND(validate(RvqConfig{4, 16, Padding::Mean}, &cb), ErrorKind::InvalidArgument);
}

TEST(Train, ExactFitIsPermutationOfInputs)
{
    const std::size_t k = 8;
    const Frames f = random_frames(k, 3, 21);
    const CodebookSet cb = train_codebooks(f, 1, k, 5);
    std::multiset<std::vector<double>> inputs;
    std::multiset<std::vector<double>> centroids;
    for (std::size_t i = 0; i < k; ++i) {
        inputs.insert(std::vector<double>(f.row(i).begin(), f.row(i).end()));
        const auto c = cb.centroid(0, i);
        centroids.insert(std::vector<double>(c.begin(), c.end()));
    }
    EXPECT_EQ(inputs, centroids);
    EXPECT_EQ(reconstruction_snr_db(f, cb, RvqConfig{1, 1, Padding::None}), kSnrSentinelDb);
}

TEST(Train, Deterministic)
{
    const Frames f = random_frames(300, 4, 1);
    EXPECT_EQ(train_codebooks(f, 3, 8, 42), train_codebooks(f, 3, 8, 42));
    EXPECT_NE(train_codebooks(f, 3, 8, 42), train_codebooks(f, 3, 8, 43));
}

TEST(Train, MeanResidualNormDecreasesPerStage)
{
    const Frames f = random_frames(500, 8, 77);
    const CodebookSet cb = train_codebooks(f, 4, 16, 3);
    std::vector<double> mean_norm(5, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::vector<double> r(f.row(i).begin(), f.row(i).end());
        mean_norm[0] += std::sqrt(norm2(r));
        for (std::size_t s = 0; s < 4; ++s) {
            const Index k = nearest_centroid(r, cb, s);
            for (std::size_t d = 0; d < r.size(); ++d) r[d] -= cb.centroid(s, k)[d];
            mean_norm[s + 1] += std::sqrt(norm2(r));
        }
    }
    for (std::size_t s = 0; s < 4; ++s) EXPECT_LE(mean_norm[s + 1], mean_norm[s]) << "stage " << s;
}

TEST(Train, Errors)
{
    EXPECT_ERROR_KIND(train_codebooks(random_frames(3, 2, 1), 1, 4, 0), ErrorKind::InvalidArgument);
    Frames bad = random_frames(10, 2, 1);
    bad.values[3] = INFINITY;
    EXPECT_ERROR_KIND(train_codebooks(bad, 1, 4, 0), ErrorKind::InvalidArgument);
}

TEST(Train, DegenerateFramesAccepted)
{
    Frames f(2, std::vector<double>(40, 0.5));
    const CodebookSet cb = train_codebooks(f, 2, 4, 9);
    for (double v : cb.data()) EXPECT_TRUE(std::isfinite(v));
    EXPECT_EQ(reconstruction_snr_db(f, cb, RvqConfig{1, 1, Padding::None}), kSnrSentinelDb);
}

TEST(EncodeFrame, ExactMatchThenZeroStages)
{
    std::vector<double> v(3 * 4 * 2, 0.0);
    CodebookSet cb(3, 4, 2, v);
    SplitMix64 rng(2);
    for (std::size_t k = 0; k < 4; ++k) {
        cb.centroid(0, k)[0] = rng.normal();
        cb.centroid(0, k)[1] = rng.normal();
    }
    for (std::size_t s = 1; s < 3; ++s) {
        for (std::size_t k = 1; k < 4; ++k) {
            cb.centroid(s, k)[0] = 1.0 + static_cast<double>(k);
        }
    }
    const auto c3 = cb.centroid(0, 3);
    const std::vector<double> frame(c3.begin(), c3.end());
    const auto idx = encode_frame(frame, cb, 3);
    EXPECT_EQ(idx, (std::vector<Index>{3, 0, 0}));
    const auto dec = decode_frame(idx, cb);
    EXPECT_EQ(dec, frame);
}

TEST(EncodeFrame, TinyInstanceMatchesBruteForce)
{
    const CodebookSet cb = random_codebooks(3, 4, 2, 8);
    SplitMix64 rng(4);
    for (int i = 0; i < 200; ++i) {
        const std::vector<double> frame{rng.normal() * 2.0, rng.normal() * 2.0};
        EXPECT_EQ(encode_frame(frame, cb, 3), brute_force_encode(frame, cb, 3));
    }
}

TEST(EncodeFrame, TiesGoToLowestIndex)
{
    const CodebookSet cb(1, 3, 1, {1.0, -1.0, 1.0});
    EXPECT_EQ(encode_frame(std::vector<double>{0.0}, cb, 1), (std::vector<Index>{0}));
    const CodebookSet cb2(1, 3, 1, {5.0, -1.0, 1.0});
    EXPECT_EQ(encode_frame(std::vector<double>{0.0}, cb2, 1), (std::vector<Index>{1}));
}

TEST(EncodeFrame, Errors)
{
    const auto cb = CodebookSet::zeros(2, 2, 3);
    EXPECT_ERROR_KIND(encode_frame(std::vector<double>{1.0, 2.0}, cb, 1), ErrorKind::InvalidArgument);
    EXPECT_ERROR_KIND(encode_frame(std::vector<double>{1.0, 2.0, 3.0}, cb, 3), ErrorKind::InvalidArgument);
}

TEST(EncodeFrame, ResidualNonIncreasingOnTrainedCodebooks)
{
    const Frames train = random_frames(1000, 4, 31);
    const CodebookSet cb = train_codebooks(train, 6, 16, 2);
    const Frames test = random_frames(300, 4, 32);
    std::size_t increases = 0;
    std::vector<double> total(7, 0.0);
    for (std::size_t i = 0; i < test.size(); ++i) {
        std::vector<double> r(test.row(i).begin(), test.row(i).end());
        double prev = norm2(r);
        total[0] += prev;
        const auto idx = encode_frame(test.row(i), cb, 6);
        for (std::size_t s = 0; s < 6; ++s) {
            for (std::size_t d = 0; d < r.size(); ++d) r[d] -= cb.centroid(s, idx[s])[d];
            const double now = norm2(r);
            total[s + 1] += now;
            if (now > prev) ++increases;
            prev = now;
        }
    }
    for (std::size_t s = 0; s < 6; ++s) EXPECT_LE(total[s + 1], total[s]);
    // Greedy choice can overshoot for a frame whose residual is already far
    // below the stage's centroid spacing; it must stay rare.
    EXPECT_LE(increases, test.size() * 6 / 20) << increases;
}

TEST(DecodeFrame, Basics)
{
    const CodebookSet cb = random_codebooks(4, 4, 3, 1);
    const std::vector<Index> one{2};
    const auto c = cb.centroid(0, 2);
    EXPECT_EQ(decode_frame(one, cb), std::vector<double>(c.begin(), c.end()));

    const auto zeros = CodebookSet::zeros(4, 4, 3);
    EXPECT_EQ(decode_frame(std::vector<Index>{1, 2, 3, 0}, zeros), std::vector<double>(3, 0.0));

    EXPECT_ERROR_KIND(decode_frame(std::vector<Index>{4}, cb), ErrorKind::InvalidArgument);
    EXPECT_ERROR_KIND(decode_frame(std::vector<Index>{0, 0, 0, 0, 0}, cb), ErrorKind::InvalidArgument);
}

TEST(DecodeFrame, FullDepthNoWorseThanOneStage)
{
    const Frames train = random_frames(600, 4, 5);
    const CodebookSet cb = train_codebooks(train, 8, 16, 6);
    const Frames test = random_frames(100, 4, 7);
    for (std::size_t i = 0; i < test.size(); ++i) {
        auto err = [&](std::size_t q) {
            const auto d = decode_frame(encode_frame(test.row(i), cb, q), cb);
            double e = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) e += (d[j] - test.row(i)[j]) * (d[j] - test.row(i)[j]);
            return e;
        };
        EXPECT_LE(err(8), err(1) + 1e-12);
    }
}

TEST(PadIndices, GoldenCases)
{
    const std::vector<Index> a{3, 5, 7, 9};
    EXPECT_EQ(pad_indices(a, 8, Padding::Mean), (std::vector<Index>{3, 5, 7, 9, 6, 6, 6, 6}));
    const std::vector<Index> b{3, 5};
    EXPECT_EQ(pad_indices(b, 5, Padding::Concat), (std::vector<Index>{3, 5, 3, 5, 3}));
    const std::vector<Index> c{2, 2, 2};
    EXPECT_EQ(pad_indices(c, 3, Padding::Mean), c);
    EXPECT_EQ(pad_indices(c, 3, Padding::Concat), c);
}

TEST(PadIndices, MeanRoundsHalfUpAndClamps)
{
    EXPECT_EQ(pad_indices(std::vector<Index>{1, 2}, 3, Padding::Mean)[2], 2u);     // 1.5 -> 2
    EXPECT_EQ(pad_indices(std::vector<Index>{1, 1, 2}, 4, Padding::Mean)[3], 1u);  // 1.33 -> 1
    EXPECT_EQ(pad_indices(std::vector<Index>{2, 3, 3}, 4, Padding::Mean)[3], 3u);  // 2.67 -> 3
    EXPECT_EQ(pad_indices(std::vector<Index>{0, 1}, 4, Padding::Mean)[3], 1u);     // 0.5 -> 1
    EXPECT_EQ(pad_indices(std::vector<Index>{9, 10}, 3, Padding::Mean, 10)[2], 9u);
}

TEST(PadIndices, Errors)
{
    EXPECT_ERROR_KIND(pad_indices(std::vector<Index>{}, 4, Padding::Mean), ErrorKind::InvalidArgument);
    EXPECT_ERROR_KIND(pad_indices(std::vector<Index>{1, 2, 3}, 2, Padding::Concat), ErrorKind::InvalidArgument);
    EXPECT_ERROR_KIND(pad_indices(std::vector<Index>{1}, 2, Padding::None), ErrorKind::InvalidArgument);
}

TEST(PadIndices, IdentityAtOwnLengthProperty)
{
    SplitMix64 rng(99);
    for (int i = 0; i < 1000; ++i) {
        std::vector<Index> x(1 + rng.below(32));
        for (auto& v : x) v = static_cast<Index>(rng.below(1024));
        EXPECT_EQ(pad_indices(x, x.size(), Padding::Mean), x);
        EXPECT_EQ(pad_indices(x, x.size(), Padding::Concat), x);
        const std::size_t target = x.size() + rng.below(40);
        const auto m = pad_indices(x, target, Padding::Mean);
        const auto c = pad_indices(x, target, Padding::Concat);
        ASSERT_EQ(m.size(), target);
        ASSERT_EQ(c.size(), target);
        EXPECT_TRUE(std::equal(x.begin(), x.end(), m.begin()));
        for (std::size_t j = 0; j < target; ++j) EXPECT_EQ(c[j], x[j % x.size()]);
    }
}

TEST(EncodeDecode, MatchesPerFrameComposition)
{
    const Frames train = random_frames(400, 4, 10);
    const CodebookSet cb = train_codebooks(train, 8, 8, 11);
    const Frames f = random_frames(50, 4, 12);
    const RvqCode code = encode(f, cb, RvqConfig{8, 8, Padding::None});
    const Frames dec = decode(code, cb);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto idx = encode_frame(f.row(i), cb, 8);
        EXPECT_TRUE(std::equal(idx.begin(), idx.end(), code.row(i).begin()));
        const auto d = decode_frame(idx, cb);
        EXPECT_TRUE(std::equal(d.begin(), d.end(), dec.row(i).begin()));
    }
}

TEST(EncodeDecode, MeanAndConcatPaddingDiffer)
{
    const Frames train = random_frames(800, 4, 13);
    const CodebookSet cb = train_codebooks(train, 8, 16, 14);
    const Frames f = random_frames(40, 4, 15);
    const Frames mean = decode(encode(f, cb, RvqConfig{4, 8, Padding::Mean}), cb);
    const Frames concat = decode(encode(f, cb, RvqConfig{4, 8, Padding::Concat}), cb);
    EXPECT_NE(mean, concat);
    const double e_narrow = reconstruction_snr_db(f, cb, RvqConfig{4, 4, Padding::None});
    const double e_mean = reconstruction_snr_db(f, cb, RvqConfig{4, 8, Padding::Mean});
    const double e_concat = reconstruction_snr_db(f, cb, RvqConfig{4, 8, Padding::Concat});
    EXPECT_TRUE(std::isfinite(e_narrow) && std::isfinite(e_mean) && std::isfinite(e_concat));
    EXPECT_NE(e_narrow, e_mean);
    EXPECT_NE(e_narrow, e_concat);
}

TEST(ReconstructionSnr, Definitions)
{
    const Frames f = random_frames(20, 3, 16);
    EXPECT_DOUBLE_EQ(reconstruction_snr_db(f, CodebookSet::zeros(2, 2, 3), RvqConfig{2, 2, Padding::None}), 0.0);
    EXPECT_ERROR_KIND(reconstruction_snr_db(Frames(3, std::vector<double>(6, 0.0)), CodebookSet::zeros(1, 2, 3),
                                            RvqConfig{1, 1, Padding::None}),
                      ErrorKind::InvalidArgument);
}

TEST(ReconstructionSnr, TruncationMonotone)
{
    const Frames train = random_frames(2048, 16, 17);
    const CodebookSet cb = train_codebooks(train, 32, 64, 18);
    const Frames f = random_frames(300, 16, 19);
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t q : {1, 2, 4, 8, 16, 20, 24, 32}) {
        const double snr = reconstruction_snr_db(f, cb, RvqConfig{q, q, Padding::None});
        EXPECT_GE(snr, prev) << "q=" << q;
        prev = snr;
    }
}

TEST(Persistence, BitExactRoundTrip)
{
    const CodebookSet cb = train_codebooks(random_frames(100, 3, 20), 3, 8, 21);
    const auto bytes = save_codebooks(cb);
    EXPECT_EQ(bytes.size(), 24u + 3 * 8 * 3 * 8);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 7), "LAVARVQ");
    EXPECT_EQ(load_codebooks(bytes), cb);
    EXPECT_EQ(save_codebooks(load_codebooks(bytes)), bytes);
}

TEST(Persistence, RejectsCorruptFiles)
{
    const auto good = save_codebooks(CodebookSet::zeros(2, 2, 2));
    auto bad = good;
    bad[0] = 'X';
    EXPECT_ERROR_KIND(load_codebooks(bad), ErrorKind::Format);
    bad = good;
    bad[8] = 2;
    EXPECT_ERROR_KIND(load_codebooks(bad), ErrorKind::Unsupported);
    bad = good;
    bad.pop_back();
    EXPECT_ERROR_KIND(load_codebooks(bad), ErrorKind::Format);
    bad = good;
    bad[16] = 1;  // K = 1
    EXPECT_ERROR_KIND(load_codebooks(bad), ErrorKind::Format);
}

TEST(Determinism, EncodeAcrossThreads)
{
    const CodebookSet cb = train_codebooks(random_frames(300, 4, 22), 6, 8, 23);
    const Frames f = random_frames(100, 4, 24);
    const RvqCode ref = encode(f, cb, RvqConfig{4, 6, Padding::Concat});
    std::vector<RvqCode> results(4);
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < results.size(); ++t) {
        threads.emplace_back([&, t] { results[t] = encode(f, cb, RvqConfig{4, 6, Padding::Concat}); });
    }
    for (auto& t : threads) t.join();
    for (const auto& r : results) EXPECT_EQ(r, ref);
}
