#!/usr/bin/env python3
"""Vectorized Euler-Maruyama oracle for the ensemble-level acceptance numbers.

Independent reference run (numpy RNG, vectorized over paths) for the four
built-in systems; prints absorbed fractions, settling statistics, and the
instability non-attraction / containment estimates.
"""
import numpy as np

rng = np.random.default_rng(123)


def spow(x, p):
    return np.sign(x) * np.abs(x) ** p


def run(drift, diff, x0, dt, t_end, n, eps_abs, d_noise):
    r = len(x0)
    x = np.tile(np.asarray(x0, dtype=float), (n, 1))
    alive = np.ones(n, dtype=bool)
    settle = np.full(n, np.nan)
    supn = np.full(n, np.linalg.norm(x0))
    minn = np.full(n, np.linalg.norm(x0))
    steps = int(round(t_end / dt))
    sq = np.sqrt(dt)
    for k in range(steps):
        t = k * dt
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        xi = x[idx]
        dw = rng.standard_normal((idx.size, d_noise)) * sq
        xn = xi + drift(t, xi) * dt + np.einsum("pij,pj->pi", diff(t, xi), dw)
        x[idx] = xn
        nrm = np.linalg.norm(xn, axis=1)
        supn[idx] = np.maximum(supn[idx], nrm)
        minn[idx] = np.minimum(minn[idx], nrm)
        hit = nrm <= eps_abs
        if hit.any():
            hidx = idx[hit]
            settle[hidx] = (k + 1) * dt
            minn[hidx] = 0.0
            x[hidx] = 0.0
            alive[hidx] = False
    return settle, supn, minn


def report(name, settle, bound=None):
    n = settle.size
    ab = np.isfinite(settle)
    frac = ab.mean()
    out = f"{name}: absorbed {frac:.4f}"
    if ab.any():
        m = settle[ab].mean()
        se = settle[ab].std(ddof=1) / np.sqrt(ab.sum())
        out += f"  mean {m:.4f}  se {se:.4f}  mean+3se {m + 3 * se:.4f}  max {settle[ab].max():.3f}"
        if bound:
            out += f"  bound {bound:.3f}  PASS={m + 3 * se <= bound and frac >= 0.95}"
    print(out)


# example 1
mu1 = lambda t: 2.0 / (1.0 + t) - abs(np.sin(2.0 * t))
d1 = lambda t, x: 0.5 * mu1(t) * spow(x, 1.0 / 3.0) - 0.5 * x
g1 = lambda t, x: (x * np.cos(x))[:, :, None]
s, sup, mn = run(d1, g1, [0.6], 1e-3, 24.105, 2000, 1e-3, 1)
report("example1", s, 16.0695)

# example 2
psi = lambda t: t * np.sin(t) / (1.0 + t)
d2 = lambda t, x: -x + (psi(t) - 0.5) * spow(x, 0.8)
def g2(t, x):
    n = x.shape[0]
    g = np.zeros((n, 2, 2))
    g[:, 0, 0] = np.sqrt(2.0) * x[:, 1] * np.cos(x[:, 0])
    g[:, 1, 1] = np.sqrt(2.0) * x[:, 0] * np.sin(x[:, 1])
    return g
s, sup, mn = run(d2, g2, [0.4, -0.6], 1e-3, 31.297, 2000, 1e-3, 2)
report("example2", s, 20.8645)

# example 3 (chi, x1, x2) with l=4, c1=c2=0.3
lam = 7.0 / 9.0
b2e, b3e = 8.0 / 9.0, 6.0 / 7.0
c1c, c2c, d2c = 0.3, 0.3, 26.000515901805652
phi = lambda t: 0.5 * (t * np.cos(t) / (1.0 + t) - 1.5)
def d3(t, x):
    chi, x1, x2 = x[:, 0], x[:, 1], x[:, 2]
    alpha = -c1c * spow(x1, lam)
    z2 = spow(x2, 1.0 / lam) - spow(alpha, 1.0 / lam)
    u = -(d2c + 0.5 * c2c) * spow(z2, 2.0 * lam - 1.0)
    return np.stack([phi(t) * spow(chi, lam), x2, u], axis=1)
def g3(t, x):
    n = x.shape[0]
    g = np.zeros((n, 3, 2))
    g[:, 0, 0] = np.cos(x[:, 1]) * spow(x[:, 0], b2e)
    g[:, 2, 1] = spow(x[:, 2], b3e) * np.sin(x[:, 0])
    return g
s, sup, mn = run(d3, g3, [0.2, 0.1, -0.2], 1e-3, 50.0, 500, 1e-2, 2)
report("example3 (eps=1e-2)", s)

# instability1 with mu = -0.05
def di(t, x):
    return 0.5 * (-0.05 - np.exp(-2.0 * t)) * x
gi = lambda t, x: (np.exp(-t) * x)[:, :, None]
s, sup, mn = run(di, gi, [0.5], 1e-3, 50.0, 1000, 1e-4, 1)
print(f"instability1: absorbed {np.isfinite(s).mean():.4f}  "
      f"nonattraction(1e-4) {(mn <= 1e-4).mean():.4f}  "
      f"containment(R=5) {(sup < 5.0).mean():.4f}  min(minn) {mn.min():.3e}")

# contrast: mu = -1 (the naive construction) to document why it fails the gate
def dint(t, x):
    return 0.5 * (-1.0 - np.exp(-2.0 * t)) * x
s, sup, mn = run(dint, gi, [0.5], 1e-3, 50.0, 200, 1e-12, 1)
print(f"instability1(mu=-1): nonattraction(1e-4) {(mn <= 1e-4).mean():.4f} (contradicts <=0.01)")
