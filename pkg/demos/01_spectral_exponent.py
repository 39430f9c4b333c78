"""
Spectral exponent of synthetic noise
====================================

Periodogram slopes for power-law noise and fractional Gaussian noise,
fitted over the default band (14-day to 32-minute periods at 2-minute
sampling).
"""

import numpy as np

from queuefractal import NoiseSpec, fit_beta, gen_fgn, gen_powerlaw, periodogram, segment_bands

# power-law noise with a known exponent
for beta0 in (0.0, 0.5, 1.0, 1.5):
    x = gen_powerlaw(NoiseSpec("powerlaw", length=2 ** 15, seed=1, beta=beta0))
    fit = fit_beta(periodogram(x))
    print(f"powerlaw beta0={beta0:.1f}  fitted beta={fit.beta:.3f}  r2={fit.r_squared:.3f}")

# fGn: spectrum goes like f^-(2H-1) at low frequency
for h in (0.6, 0.75, 0.9):
    betas = [fit_beta(periodogram(gen_fgn(NoiseSpec("fgn", 2 ** 15, s, hurst=h)))).beta
             for s in range(5)]
    print(f"fgn H={h}  mean beta={np.mean(betas):.3f}  (2H-1 = {2 * h - 1:.2f})")

# which bins land in each region of the spectrum
spec = periodogram(gen_fgn(NoiseSpec("fgn", 2 ** 15, 0, hurst=0.8)))
print(segment_bands(spec).counts())
