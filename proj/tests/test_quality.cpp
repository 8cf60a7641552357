#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "lava/quality.hpp"
#include "test_util.hpp"

using namespace lava;

namespace {

Waveform noisy_gamma(double snr_db, std::uint64_t seed, std::size_t n = 100000)
{
    const Waveform s = gen_gamma_signal(n, 0.4, seed);
    const Waveform noise = gen_white_noise(n, seed ^ 0x9e3779b97f4a7c15ULL);
    return mix_at_snr(s, noise, snr_db);
}

} // namespace

TEST(SnrTable, BuiltinShape)
{
    const auto& t = SnrLookupTable::builtin();
    EXPECT_EQ(t.entries().size(), 100u);
    EXPECT_DOUBLE_EQ(t.min_db(), -20.0);
    EXPECT_DOUBLE_EQ(t.max_db(), 100.0);
    for (std::size_t i = 1; i < t.entries().size(); ++i) {
        EXPECT_GT(t.entries()[i].first, t.entries()[i - 1].first);
        EXPECT_GT(t.entries()[i].second, t.entries()[i - 1].second);
    }
}

TEST(SnrTable, DataFileMatchesBuiltin)
{
    std::ifstream in(LAVA_DATA_DIR "/wada_gamma_0.4.txt");
    ASSERT_TRUE(in) << "missing data file";
    const SnrLookupTable file = SnrLookupTable::parse(in);
    const auto& builtin = SnrLookupTable::builtin();
    ASSERT_EQ(file.entries().size(), builtin.entries().size());
    for (std::size_t i = 0; i < file.entries().size(); ++i) {
        EXPECT_NEAR(file.entries()[i].first, builtin.entries()[i].first, 1e-9);
        EXPECT_NEAR(file.entries()[i].second, builtin.entries()[i].second, 1e-6);
    }
}

TEST(SnrTable, InterpolatesAndClamps)
{
    const SnrLookupTable t({{1.0, 0.0}, {2.0, 10.0}, {4.0, 20.0}});
    EXPECT_DOUBLE_EQ(t.lookup(0.5), 0.0);
    EXPECT_DOUBLE_EQ(t.lookup(1.0), 0.0);
    EXPECT_DOUBLE_EQ(t.lookup(1.5), 5.0);
    EXPECT_DOUBLE_EQ(t.lookup(2.0), 10.0);
    EXPECT_DOUBLE_EQ(t.lookup(3.0), 15.0);
    EXPECT_DOUBLE_EQ(t.lookup(9.0), 20.0);
}

TEST(SnrTable, ParseErrors)
{
    std::istringstream bad("# header\n1.0 0.0\n2.0 x\n");
    EXPECT_ERROR_KIND(SnrLookupTable::parse(bad), ErrorKind::Format);
    std::istringstream non_monotone("1.0 0.0\n0.5 10.0\n");
    EXPECT_ERROR_KIND(SnrLookupTable::parse(non_monotone), ErrorKind::Format);
    std::istringstream one("1.0 0.0\n");
    EXPECT_ERROR_KIND(SnrLookupTable::parse(one), ErrorKind::Format);
    std::istringstream ok("# c\n\n1 0\n2 5\n");
    EXPECT_EQ(SnrLookupTable::parse(ok).entries().size(), 2u);
}

TEST(Wada, NoiselessGammaClampsAtTableMaximum)
{
    EXPECT_DOUBLE_EQ(wada_snr(gen_gamma_signal(600000, 0.4, 1)), 100.0);
}

TEST(Wada, TenDbMixtureWithinThreeDb)
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        EXPECT_NEAR(wada_snr(noisy_gamma(10.0, seed)), 10.0, 3.0) << seed;
    }
}

TEST(Wada, StrictlyIncreasingAcrossZeroTenTwenty)
{
    const double a = wada_snr(noisy_gamma(0.0, 3));
    const double b = wada_snr(noisy_gamma(10.0, 3));
    const double c = wada_snr(noisy_gamma(20.0, 3));
    EXPECT_LT(a, b);
    EXPECT_LT(b, c);
}

TEST(Wada, StaysWithinClampBounds)
{
    EXPECT_DOUBLE_EQ(wada_snr(gen_white_noise(50000, 2)), -20.0);
    for (double snr : {-30.0, -5.0, 40.0, 80.0}) {
        const double est = wada_snr(noisy_gamma(snr, 4, 20000));
        EXPECT_GE(est, -20.0);
        EXPECT_LE(est, 100.0);
    }
}

TEST(Wada, ScaleInvariant)
{
    const Waveform w = noisy_gamma(12.0, 6, 50000);
    for (double c : {1e-3, 0.5, 7.0}) {
        Waveform s = w;
        for (auto& x : s.samples) x *= c;
        EXPECT_NEAR(wada_snr(s), wada_snr(w), 1e-9) << c;
    }
}

TEST(Wada, SilentInputIsAnError)
{
    EXPECT_ERROR_KIND(wada_snr(Waveform{std::vector<double>(100, 0.0), 24000}), ErrorKind::InvalidArgument);
    EXPECT_ERROR_KIND(wada_snr(Waveform{std::vector<double>(100, 1e-12), 24000}), ErrorKind::InvalidArgument);
    EXPECT_ERROR_KIND(wada_snr(Waveform{}), ErrorKind::InvalidArgument);
}

TEST(Wada, StatisticMatchesDirectFormula)
{
    const Waveform w{{0.5, -0.25, 1.0, 0.0, -2.0}, 24000};
    // Zeros are excluded from both means; normalization cancels in G.
    const double m = (0.5 + 0.25 + 1.0 + 2.0) / 4.0;
    const double l = (std::log(0.5) + std::log(0.25) + std::log(1.0) + std::log(2.0)) / 4.0;
    EXPECT_NEAR(wada_statistic(w), std::log(m) - l, 1e-12);
}

TEST(ReferenceSnr, Definitions)
{
    const Waveform r = gen_gamma_signal(1000, 0.4, 1);
    EXPECT_EQ(reference_snr(r, r), kSnrSentinelDb);
    EXPECT_DOUBLE_EQ(reference_snr(r, Waveform{std::vector<double>(1000, 0.0), r.sample_rate_hz}), 0.0);
    Waveform half = r;
    for (auto& x : half.samples) x *= 0.5;
    EXPECT_NEAR(reference_snr(r, half), 10.0 * std::log10(4.0), 1e-12);
    EXPECT_NEAR(reference_snr(r, half), 6.0206, 1e-4);
}

TEST(ReferenceSnr, DecreasesWithNoisePower)
{
    const Waveform r = gen_gamma_signal(5000, 0.4, 2);
    const Waveform n = gen_white_noise(5000, 3);
    double prev = kSnrSentinelDb + 1.0;
    for (double g : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
        Waveform t = r;
        for (std::size_t i = 0; i < t.samples.size(); ++i) t.samples[i] += g * n.samples[i];
        const double snr = reference_snr(r, t);
        EXPECT_LT(snr, prev);
        prev = snr;
    }
}

TEST(ReferenceSnr, Errors)
{
    const Waveform r = gen_gamma_signal(100, 0.4, 1);
    EXPECT_ERROR_KIND(reference_snr(r, gen_gamma_signal(99, 0.4, 1)), ErrorKind::InvalidArgument);
    EXPECT_ERROR_KIND(reference_snr(Waveform{std::vector<double>(100, 0.0), 24000}, r), ErrorKind::InvalidArgument);
    EXPECT_ERROR_KIND(reference_snr(r, gen_gamma_signal(100, 0.4, 1, 16000)), ErrorKind::InvalidArgument);
}
