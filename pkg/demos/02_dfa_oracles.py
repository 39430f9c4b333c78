"""
DFA against known answers
=========================

White noise gives alpha = 1/2, fGn gives alpha = H, fBm gives H + 1, and
1/f noise sits at alpha = 1.  The last block compares beta with 2*alpha - 1.
"""

from queuefractal import (NoiseSpec, dfa_global, fit_beta, gen_fbm, gen_fgn, gen_powerlaw,
                          gen_white, periodogram, wk_check)

N = 2 ** 15

print("white ", round(dfa_global(gen_white(NoiseSpec("white", N, 0))).alpha, 3))
for h in (0.3, 0.5, 0.7, 0.9):
    a = dfa_global(gen_fgn(NoiseSpec("fgn", N, 0, hurst=h))).alpha
    b = dfa_global(gen_fbm(NoiseSpec("fbm", N, 0, hurst=h))).alpha
    print(f"H={h}  fgn alpha={a:.3f}  fbm alpha={b:.3f}")

curve = dfa_global(gen_fgn(NoiseSpec("fgn", N, 0, hurst=0.8)))
for s, f in zip(curve.scales, curve.fluctuation):
    print(f"  s={s:5d}  F={f:10.3f}")

for beta0 in (0.4, 0.8, 1.0):
    x = gen_powerlaw(NoiseSpec("powerlaw", N, 3, beta=beta0))
    chk = wk_check(fit_beta(periodogram(x)).beta, dfa_global(x).alpha)
    print(f"beta0={beta0}  beta={chk.beta:.3f}  2a-1={chk.beta_tilde:.3f}  diff={chk.abs_diff:.3f}")
