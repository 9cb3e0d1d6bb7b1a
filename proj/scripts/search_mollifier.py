"""One-off search for the mollifier constants (a, N).

For each dimension, phi_a = zeta * xi_a / ||zeta * xi_a||_1 is tabulated radially
and the mass of phi_a inside the ball B_N((N + a) e_1) is computed. The pair
(a, N) is accepted when that mass is at least 1/3 in d = 1, 2, 3, with margin.
Kept as an oracle: tests/unit/test_init_data.cpp recomputes the same masses in C++.
"""
import numpy as np
from scipy import integrate


def zeta(d, rho):
    rho = np.asarray(rho, dtype=float)
    if d == 1:
        return np.clip(0.5 - np.abs(rho), 0.0, None)
    if d == 2:
        with np.errstate(divide="ignore"):
            return np.where(rho < 0.5, -np.log(np.maximum(2.0 * rho, 1e-300)), 0.0)
    with np.errstate(divide="ignore"):
        return np.where(rho < 0.5, 1.0 / np.maximum(rho, 1e-300) - 2.0, 0.0)


def xi(a, s):
    s = np.asarray(s, dtype=float)
    t = np.clip(s / a, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(t < 1.0, np.exp(-1.0 / np.maximum(1.0 - t * t, 1e-300)), 0.0)


def sphere_mean_zeta(d, r, s):
    if d == 1:
        return 0.5 * (zeta(1, r + s) + zeta(1, r - s))
    if d == 3:
        if r == 0.0 or s == 0.0:
            return float(zeta(3, max(r, s)))
        lo, hi = abs(r - s), min(r + s, 0.5)
        if lo >= hi:
            return 0.0
        return ((hi - hi * hi) - (lo - lo * lo)) / (2.0 * r * s)
    if r + s <= 0.5:
        return -np.log(2.0 * max(r, s)) if max(r, s) > 0 else 0.0
    if abs(r - s) >= 0.5:
        return 0.0
    k = (0.25 - r * r - s * s) / (2.0 * r * s)
    th0 = np.arccos(np.clip(k, -1.0, 1.0))
    f = lambda th: -np.log(2.0 * np.sqrt(max(r * r + s * s + 2 * r * s * np.cos(th), 1e-300)))
    val, _ = integrate.quad(f, th0, np.pi, limit=200)
    return val / np.pi


SURF = {1: lambda s: 2.0, 2: lambda s: 2 * np.pi * s, 3: lambda s: 4 * np.pi * s * s}
ZETA_L1 = {1: 0.25, 2: np.pi / 8, 3: np.pi / 6}


def phi_table(d, a, n=801):
    r = np.linspace(0.0, 0.5 + a, n)
    xi_l1, _ = integrate.quad(lambda s: xi(a, s) * SURF[d](s), 0.0, a)
    vals = []
    for ri in r:
        v, _ = integrate.quad(lambda s: xi(a, s) * SURF[d](s) * sphere_mean_zeta(d, ri, s), 0.0, a,
                              points=[x for x in (ri, abs(0.5 - ri)) if 0 < x < a], limit=200)
        vals.append(v)
    return r, np.array(vals) / (ZETA_L1[d] * xi_l1)


def ball_fraction(d, r, s, c, N):
    # share of the sphere |y| = s inside B_N(c e_1)
    if s == 0.0:
        return 1.0 if c < N else 0.0
    k = (s * s + c * c - N * N) / (2.0 * s * c)
    k = np.clip(k, -1.0, 1.0)
    if d == 1:
        return 0.5 * ((1.0 > k) + (-1.0 > k))
    if d == 2:
        return np.arccos(k) / np.pi
    return 0.5 * (1.0 - k)


def ball_mass(d, a, N):
    r, v = phi_table(d, a)
    w = np.array([SURF[d](s) * ball_fraction(d, 0, s, N + a, N) for s in r])
    total = np.trapezoid(v * np.array([SURF[d](s) for s in r]), r)
    return np.trapezoid(v * w, r), total


if __name__ == "__main__":
    for a in (0.03, 0.05, 0.08, 0.1):
        for N in (1.0, 2.0):
            masses = [ball_mass(d, a, N) for d in (1, 2, 3)]
            ok = all(m >= 1.0 / 3.0 for m, _ in masses)
            print(f"a={a:.2f} N={N:.0f} " + " ".join(f"d{d}: {m:.4f} (unit {t:.4f})" for d, (m, t) in zip((1, 2, 3), masses)),
                  "ok" if ok else "")
