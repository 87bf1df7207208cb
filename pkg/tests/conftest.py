"""Shared test oracles.

The brute-force scanner below is deliberately independent of the package:
it rebuilds the profit formula from raw numpy so it can arbitrate against the
library's optimizers.
"""

import numpy as np
import pytest


def phi_fraction(kappa, g, n):
    return 1.0 - kappa / (1.0 + g * np.asarray(n, dtype=float))


def phi_exponential(mu, h, n):
    return 1.0 - mu * np.exp(-h * np.asarray(n, dtype=float))


def brute_force_best(phi_fn, users, w, p_b, n_lo, n_hi, dn=0.01, dps=1e-4, chunk=512):
    """Exhaustive scan of p_s*M*(u(n)*w - p_s) - p_b*n; returns (profit, n, p_s).

    Ties resolve to the first (smallest n, then smallest p_s) grid point.
    """
    ns = np.arange(n_lo, n_hi + dn / 2, dn)
    pss = np.arange(0.0, w + dps / 2, dps)
    best = (-np.inf, None, None)
    for i0 in range(0, ns.size, chunk):
        n_blk = ns[i0:i0 + chunk]
        u_blk = phi_fn(n_blk)
        prof = pss[None, :] * users * (u_blk[:, None] * w - pss[None, :]) - p_b * n_blk[:, None]
        flat = int(np.argmax(prof))
        i, j = divmod(flat, pss.size)
        if prof[i, j] > best[0]:
            best = (float(prof[i, j]), float(n_blk[i]), float(pss[j]))
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
