#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lava/detail/wada_table_data.hpp"
#include "lava/error.hpp"
#include "lava/rvq.hpp"
#include "lava/signal.hpp"

namespace lava {

/// Maps the WADA statistic G to SNR in dB. Both columns are strictly
/// increasing; lookups outside the table clamp to the end points.
class SnrLookupTable {
public:
    explicit SnrLookupTable(std::vector<std::pair<double, double>> entries) : entries_(std::move(entries))
    {
        if (entries_.size() < 2) {
            fail(ErrorKind::Format, "SNR table needs at least two entries");
        }
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto [g, db] = entries_[i];
            if (!std::isfinite(g) || !std::isfinite(db)) {
                fail(ErrorKind::Format, "SNR table entry " + std::to_string(i + 1) + " is not finite");
            }
            if (i > 0 && !(g > entries_[i - 1].first && db > entries_[i - 1].second)) {
                fail(ErrorKind::Format, "SNR table is not strictly increasing at entry " + std::to_string(i + 1));
            }
        }
    }

    /// The built-in Gamma(0.4) table, also shipped as data/wada_gamma_0.4.txt.
    static const SnrLookupTable& builtin()
    {
        static const SnrLookupTable table(
            std::vector<std::pair<double, double>>(detail::kWadaGammaTable.begin(), detail::kWadaGammaTable.end()));
        return table;
    }

    /// One "g_value snr_db" pair per line. Blank lines and '#' comments are
    /// ignored.
    static SnrLookupTable parse(std::istream& in)
    {
        std::vector<std::pair<double, double>> entries;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') {
                continue;
            }
            std::istringstream fields(line);
            double g = 0.0;
            double db = 0.0;
            std::string extra;
            if (!(fields >> g >> db) || (fields >> extra)) {
                fail(ErrorKind::Format, "SNR table line " + std::to_string(line_no) + ": expected \"g_value snr_db\"");
            }
            entries.emplace_back(g, db);
        }
        return SnrLookupTable(std::move(entries));
    }

    double min_db() const noexcept { return entries_.front().second; }
    double max_db() const noexcept { return entries_.back().second; }
    const std::vector<std::pair<double, double>>& entries() const noexcept { return entries_; }

    double lookup(double g) const noexcept
    {
        if (!(g > entries_.front().first)) {
            return min_db();
        }
        if (g >= entries_.back().first) {
            return max_db();
        }
        const auto hi = std::upper_bound(entries_.begin(), entries_.end(), g,
                                         [](double v, const auto& e) { return v < e.first; });
        const auto lo = hi - 1;
        const double t = (g - lo->first) / (hi->first - lo->first);
        return lo->second + t * (hi->second - lo->second);
    }

private:
    std::vector<std::pair<double, double>> entries_;
};

inline constexpr double kWadaEpsilon = 1e-10;

/// The WADA statistic ln(mean|x|) - mean(ln|x|) after normalizing to unit
/// mean absolute amplitude, over samples with |x| > kWadaEpsilon.
inline double wada_statistic(const Waveform& w)
{
    validate(w);
    require(!w.samples.empty(), "empty waveform");
    double mean_abs = 0.0;
    double peak = 0.0;
    for (double s : w.samples) {
        mean_abs += std::abs(s);
        peak = std::max(peak, std::abs(s));
    }
    mean_abs /= static_cast<double>(w.samples.size());
    if (!(peak > kWadaEpsilon)) {
        fail(ErrorKind::InvalidArgument, "waveform is silent");
    }

    double sum_abs = 0.0;
    double sum_log = 0.0;
    std::size_t n = 0;
    for (double s : w.samples) {
        const double a = std::abs(s) / mean_abs;
        if (a > kWadaEpsilon) {
            sum_abs += a;
            sum_log += std::log(a);
            ++n;
        }
    }
    if (n == 0) {
        fail(ErrorKind::InvalidArgument, "waveform is silent");
    }
    return std::log(sum_abs / static_cast<double>(n)) - sum_log / static_cast<double>(n);
}

/// Blind SNR estimate (dB) assuming Gamma-distributed speech amplitudes in
/// additive Gaussian noise.
inline double wada_snr(const Waveform& w, const SnrLookupTable& table = SnrLookupTable::builtin())
{
    return table.lookup(wada_statistic(w));
}

/// 10 log10(sum r^2 / sum (r - t)^2); kSnrSentinelDb on exact match.
inline double reference_snr(const Waveform& reference, const Waveform& test)
{
    validate(reference);
    validate(test);
    require(reference.sample_rate_hz == test.sample_rate_hz, "sample rate mismatch");
    require(reference.samples.size() == test.samples.size(),
            "length mismatch: reference has " + std::to_string(reference.samples.size()) + " samples, test has "
                + std::to_string(test.samples.size()));
    double sig = 0.0;
    double err = 0.0;
    for (std::size_t i = 0; i < reference.samples.size(); ++i) {
        const double r = reference.samples[i];
        const double e = r - test.samples[i];
        sig += r * r;
        err += e * e;
    }
    require(sig > 0.0, "reference is silent");
    return snr_from_energies(sig, err);
}

} // namespace lava
