#!/usr/bin/env python3
"""Generate the WADA-SNR lookup table (G statistic vs. SNR in dB).

Model: speech samples are symmetric Gamma(alpha=0.4, scale=1) amplitudes,
noise is zero-mean Gaussian scaled to the requested SNR (power ratio).
For each SNR point the expected statistic

    G = ln E|z| - E ln|z|,   z = x + n

is evaluated by numerical quadrature:

  * E|x + n| uses the folded-normal mean in closed form for the inner
    expectation over n.
  * E ln|m + u| (u ~ N(0,1)) is integrated directly with the log
    singularity split out, and replaced by its asymptotic series for m > 12.
  * The outer Gamma expectation substitutes x = t^(1/alpha), which removes
    the x^(alpha-1) endpoint singularity.

The result is written as data/wada_gamma_0.4.txt ("g_value snr_db" per line)
and as the constexpr array in include/lava/detail/wada_table_data.hpp.

Requires numpy and scipy. Run from the repository root.
"""

import argparse
import pathlib

import numpy as np
from scipy import integrate, special

ALPHA = 0.4
N_POINTS = 100
SNR_MIN_DB = -20.0
SNR_MAX_DB = 100.0

E_LOG_ABS_STD_NORMAL = (np.log(2.0) + special.digamma(0.5)) / 2.0


def expected_log_abs_shifted_normal(m):
    """E ln|m + u| for u ~ N(0, 1)."""
    m = abs(m)
    if m == 0.0:
        return E_LOG_ABS_STD_NORMAL
    if m > 12.0:
        return (np.log(m) - 1.0 / (2 * m**2) - 3.0 / (4 * m**4)
                - 5.0 / (2 * m**6) - 105.0 / (8 * m**8))

    def f(u):
        return np.log(abs(m + u)) * np.exp(-u * u / 2.0) / np.sqrt(2.0 * np.pi)

    lo, _ = integrate.quad(f, -m - 12.0, -m, limit=200)
    hi, _ = integrate.quad(f, -m, 12.0, limit=200)
    return lo + hi


def gamma_expectation(f, sigma):
    """E f(x) for x ~ Gamma(ALPHA, 1), via x = t^(1/ALPHA)."""

    def g(t):
        x = t ** (1.0 / ALPHA)
        return np.exp(-x) * f(x) / (ALPHA * special.gamma(ALPHA))

    breaks = sorted({sigma**ALPHA, (10 * sigma) ** ALPHA, (0.1 * sigma) ** ALPHA, 1.0})
    breaks = [b for b in breaks if 0.0 < b < 60.0]
    value, _ = integrate.quad(g, 0.0, 60.0, points=breaks, limit=500,
                              epsabs=1e-14, epsrel=1e-12)
    return value


def g_statistic(snr_db):
    signal_power = ALPHA * (ALPHA + 1.0)
    sigma = np.sqrt(signal_power / 10.0 ** (snr_db / 10.0))

    def folded_mean(x):
        return (sigma * np.sqrt(2.0 / np.pi) * np.exp(-x * x / (2 * sigma * sigma))
                + x * special.erf(x / (sigma * np.sqrt(2.0))))

    e_abs = gamma_expectation(folded_mean, sigma)
    e_log = np.log(sigma) + gamma_expectation(
        lambda x: expected_log_abs_shifted_normal(x / sigma), sigma)
    return np.log(e_abs) - e_log


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--root", default=".", help="repository root")
    args = parser.parse_args()
    root = pathlib.Path(args.root)

    import warnings
    warnings.filterwarnings("ignore", category=integrate.IntegrationWarning)

    snrs = np.linspace(SNR_MIN_DB, SNR_MAX_DB, N_POINTS)
    gs = [g_statistic(s) for s in snrs]
    for a, b in zip(gs, gs[1:]):
        if not b > a:
            raise SystemExit("table is not strictly increasing in G")

    lines = [f"{g:.10f} {s:.6f}" for g, s in zip(gs, snrs)]
    (root / "data").mkdir(exist_ok=True)
    (root / "data" / "wada_gamma_0.4.txt").write_text("\n".join(lines) + "\n")

    rows = ",\n".join(f"    {{{g:.10f}, {s:.6f}}}" for g, s in zip(gs, snrs))
    header = f"""// Generated by tools/gen_wada_table.py. Do not edit.
#pragma once

#include <array>
#include <utility>

namespace lava::detail {{

// (G statistic, SNR dB) for Gamma(0.4) speech plus Gaussian noise.
inline constexpr std::array<std::pair<double, double>, {N_POINTS}> kWadaGammaTable{{{{
{rows}
}}}};

}} // namespace lava::detail
"""
    out = root / "include" / "lava" / "detail" / "wada_table_data.hpp"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(header)


if __name__ == "__main__":
    main()
