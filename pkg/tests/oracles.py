"""Independent reference computations shared by the test modules.

Nothing here calls into the package, so the oracles cannot inherit a bug
from the code they check.
"""

import numpy as np


def brute_play(v, r, w_init):
    w, out = w_init, []
    for x in v:
        w = max(x - r, min(x + r, w))
        out.append(w)
    return np.array(out)


def tie_threshold(v, eta, r, w_init):
    """Largest lambda for which the play of v + lambda*eta keeps the branch
    pattern of the play of v.

    Below it every node value is affine in lambda, w_k(lambda) = w_k +
    lambda*dw_k, so difference quotients are exact. Strict gaps between the
    memory and the band edges must not close; exact contacts are resolved
    by taking the larger (lower edge) or smaller (upper edge) slope, which
    is what the perturbed max/min does for every small lambda.
    """
    w, dw = w_init, 0.0
    lam_max = np.inf
    for x, dx in zip(v, eta):
        lo, hi = x - r, x + r
        for gap, closing in ((w - lo, dx - dw), (hi - w, dw - dx),
                             (lo - w, dw - dx), (w - hi, dx - dw)):
            if gap > 0 and closing > 0:
                lam_max = min(lam_max, gap / closing)
        if w < lo or w > hi:
            dw_new = dx
        elif w == lo:
            dw_new = max(dx, dw)
        elif w == hi:
            dw_new = min(dx, dw)
        else:
            dw_new = dw
        w, dw = max(lo, min(hi, w)), dw_new
    return lam_max


def dyadic(gen, size, scale=64):
    """Random multiples of 1/scale in [-3, 3); exact in binary floating point."""
    return gen.integers(-3 * scale, 3 * scale, size) / scale


def dense_solve(lower, diag, upper, rhs):
    n = len(diag)
    a = np.zeros((n, n))
    a[np.arange(n), np.arange(n)] = diag
    a[np.arange(1, n), np.arange(n - 1)] = lower[1:]
    a[np.arange(n - 1), np.arange(1, n)] = upper[:-1]
    return np.linalg.solve(a, rhs)


def sine_decay(mesh, grid):
    x, t = np.meshgrid(mesh.nodes, grid.nodes, indexing="ij")
    return np.exp(-np.pi**2 * t) * np.sin(np.pi * x / mesh.X)


def observed_orders(errors):
    e = np.asarray(errors, dtype=float)
    return np.log2(e[:-1] / e[1:])
