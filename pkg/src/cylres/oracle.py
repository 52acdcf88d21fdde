"""Exact 1D scattering data for piecewise-constant profiles.

Everything here comes from 2x2 transfer matrices, never from the Nystrom
discretization, so it serves as independent ground truth for separable
potentials V = V(t).

For the full line the Jost-type function is

    W(k) = 2ik a(k),   a(k) = 1 / T(k)   (transmission denominator),

which is entire in k; zeros of a are the zeros of W other than k = 0.
On the Dirichlet half-line the Jost function F(k) = f(k, 0) is used.
"""
from __future__ import annotations

import functools
import math

import numpy as np

from .kernels import FULL_LINE, HALF_LINE
from .potential import Profile
from .records import ResonanceRecord
from .sheets import RampChart, R1Chart, LambdaChart, BoundaryChart


def _check_profile(prof: Profile):
    if not prof.constant:
        raise ValueError("the transfer-matrix oracle needs a piecewise-constant profile")


def _back(k, prof: Profile, x_end, u, du):
    """Carry (u, u') from x_end leftwards through every piece."""
    b, vals = prof.breaks, prof.pieces
    for p in range(len(vals) - 1, -1, -1):
        h = b[p + 1] - b[p]
        q = np.sqrt(k * k - vals[p])
        c = np.cos(q * h)
        s = h * np.sinc(q * h / np.pi)
        u, du = c * u - s * du, (q * q) * s * u + c * du
    return u, du


def _outgoing_at_left(k, prof: Profile):
    k = np.asarray(k, dtype=complex)
    xN = prof.breaks[-1]
    e = np.exp(1j * k * xN)
    return _back(k, prof, xN, e, 1j * k * e)


def jost_w(k, prof: Profile):
    """W(k) = 2ik a(k); W = 2ik when V = 0."""
    _check_profile(prof)
    k = np.asarray(k, dtype=complex)
    u0, du0 = _outgoing_at_left(k, prof)
    x0 = prof.breaks[0]
    return np.exp(-1j * k * x0) * (1j * k * u0 + du0)


def transmission_denominator(k, prof: Profile):
    k = np.asarray(k, dtype=complex)
    return jost_w(k, prof) / (2j * k)


def jost_half(k, prof: Profile):
    """Jost function F(k) = f(k, 0) for the Dirichlet half-line; F = 1 when V = 0."""
    _check_profile(prof)
    if prof.breaks[0] < 0:
        raise ValueError("half-line profile must live in t >= 0")
    if prof.breaks[0] > 0:
        prof = Profile((0.0,) + prof.breaks, (0.0,) + prof.pieces)
    u0, _ = _outgoing_at_left(k, prof)
    return u0


def oracle_function(prof: Profile, geometry=FULL_LINE):
    if geometry == HALF_LINE:
        return lambda k: jost_half(k, prof)
    return lambda k: jost_w(k, prof)


def scattering_1d(k, prof: Profile):
    """(R_left, T, R_right) with the end coordinates t = -x (left), t = x (right).

    Incoming e^{ikx} from the left produces R_left e^{-ikx} on the left and
    T e^{ikx} on the right.
    """
    _check_profile(prof)
    k = np.asarray(k, dtype=complex)

    def left(pr):
        u0, du0 = _outgoing_at_left(k, pr)
        x0 = pr.breaks[0]
        A = np.exp(-1j * k * x0) * (1j * k * u0 + du0) / (2j * k)
        B = np.exp(1j * k * x0) * (1j * k * u0 - du0) / (2j * k)
        return B / A, 1.0 / A

    RL, T = left(prof)
    RR, _ = left(prof.mirrored())
    return RL, T, RR


def scattering_half(k, prof: Profile):
    """S(k) = -F(-k)/F(k) for e^{-ikt} + S e^{ikt} on the Dirichlet half-line."""
    k = np.asarray(k, dtype=complex)
    return -jost_half(-k, prof) / jost_half(k, prof)


def bound_state_count(prof: Profile, kappa_max=None, n=20000):
    """Textbook count: sign changes of the real function W(i kappa), kappa > 0."""
    _check_profile(prof)
    if kappa_max is None:
        kappa_max = math.sqrt(max(0.0, -min(prof.pieces))) + 1.0
    kap = np.linspace(kappa_max / n, kappa_max, n)
    w = jost_w(1j * kap, prof).real
    return int(np.count_nonzero(np.sign(w[1:]) != np.sign(w[:-1])))


# ---------------------------------------------------------------- root finding

def _phase_total(f, pts):
    v = f(pts)
    if np.any(v == 0):
        return None, v
    d = np.angle(np.roll(v, -1) / v)
    return d, v


def circle_count(f, c, r, n0=256, max_n=2 ** 18):
    """Zeros of f inside |k - c| < r by sampled phase increments."""
    n = n0
    while n <= max_n:
        th = 2 * np.pi * np.arange(n) / n
        d, _ = _phase_total(f, c + r * np.exp(1j * th))
        if d is not None and np.max(np.abs(d)) < 0.6:
            tot = d.sum() / (2 * np.pi)
            if abs(tot - round(tot)) < 1e-6:
                return int(round(tot))
        n *= 2
    raise RuntimeError("phase on the counting circle could not be resolved")


def _deriv(f, k, h):
    # Cauchy formula on a small circle
    m = 8
    e = np.exp(2j * np.pi * np.arange(m) / m)
    vals = f(k[..., None] + h[..., None] * e)
    return (vals * e.conj()).mean(axis=-1) / h


def _newton(f, k, steps=60):
    k = np.array(k, dtype=complex)
    for _ in range(steps):
        h = 1e-4 * (1.0 + np.abs(k))
        fk = f(k)
        dk = fk / _deriv(f, k, h)
        dk = np.where(np.isfinite(dk), dk, 0)
        k = k - dk
        if np.all(np.abs(dk) < 1e-15 * (1 + np.abs(k))):
            break
    return k


def zeros_in_disk(f, radius, spacing=0.2, center=0j, tries=5):
    """All zeros of the entire function f in |k - center| < radius.

    Dense scan of |f| for local minima, Newton polish, and an argument
    principle count on the boundary that must match the multiplicities.
    Returns a sorted list of (k, multiplicity).
    """
    total = circle_count(f, center, radius)
    if total == 0:
        return []
    h = spacing
    for _ in range(tries):
        n = int(math.ceil(2 * radius / h)) + 3
        xs = center.real + np.linspace(-radius - h, radius + h, n)
        ys = center.imag + np.linspace(-radius - h, radius + h, n)
        K = xs[None, :] + 1j * ys[:, None]
        A = np.abs(f(K))
        core = A[1:-1, 1:-1]
        is_min = np.ones_like(core, dtype=bool)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dx or dy:
                    is_min &= core <= A[1 + dy:n - 1 + dy, 1 + dx:n - 1 + dx]
        seeds = K[1:-1, 1:-1][is_min]
        roots = _newton(f, seeds)
        good = np.isfinite(roots) & (np.abs(roots - center) < radius)
        found = []
        for z in roots[good]:
            if not any(abs(z - w) < 1e-7 * (1 + abs(z)) for w in found):
                found.append(z)
        out = []
        for z in found:
            rr = min([0.25 * h] + [0.5 * abs(z - w) for w in found if w != z])
            rr = min(rr, 0.5 * (radius - abs(z - center))) if radius > abs(z - center) else rr
            mult = circle_count(f, z, rr)
            if mult > 0:
                out.append((complex(z), mult))
        if sum(m for _, m in out) == total:
            return sorted(out, key=lambda p: (round(p[0].real, 9), p[0].imag))
        h /= 2
    raise RuntimeError(f"oracle scan found {sum(m for _, m in out)} of {total} zeros")


@functools.lru_cache(maxsize=64)
def _cached_zeros(prof_key, geometry, radius):
    prof = _PROFILES[prof_key]
    f = oracle_function(prof, geometry)
    z = zeros_in_disk(f, radius)
    if geometry == FULL_LINE:
        # W has a spurious zero at k = 0 coming from the factor 2ik
        z = [(k, m) for k, m in z if abs(k) > 1e-8]
    return tuple(z)


_PROFILES: dict = {}


def _profile_key(prof: Profile):
    key = (prof.breaks, prof.pieces)
    _PROFILES[key] = prof
    return key


def zeros_1d(prof: Profile, radius: float, geometry=FULL_LINE):
    """Zeros (k, order) of a(k) (full line) or F(k) (half-line) with |k| < radius."""
    _check_profile(prof)
    if prof.is_zero():
        return []
    # quantize the radius upward so nearby requests share the cache
    R = math.ceil(radius * 4) / 4 + 0.25
    return [(k, m) for k, m in _cached_zeros(_profile_key(prof), geometry, R) if abs(k) < radius]


# ---------------------------------------------------------------- resonances

def chart_preimages(chart, lam):
    """Chart coordinates over the base value lam."""
    if isinstance(chart, (LambdaChart, BoundaryChart)):
        return [complex(lam)]
    if isinstance(chart, RampChart):
        w = complex(np.sqrt(lam - chart.cs.nu_sq[chart.m - 1]))
    elif isinstance(chart, R1Chart):
        w = complex(np.sqrt(lam - chart.cs.nu_sq[0]))
    else:
        raise TypeError(f"unsupported chart {chart!r}")
    return [w, -w]


def _lam_radius(chart, center, radius, nu_sq):
    th = 2 * np.pi * np.arange(256) / 256
    lam = chart.lam(center + radius * np.exp(1j * th))
    return float(np.max(np.abs(lam - nu_sq)))


def separable_oracle(prof: Profile, cs, region, geometry=FULL_LINE, n_thresholds=None,
                     mult_of=None):
    """Resonances of the separable problem inside ``region`` from 1D zeros.

    ``region`` is a :class:`cylres.fredholm.Region`. Each zero k of the 1D
    function, for threshold j, is placed at lambda = nu_j^2 + k^2 on the
    branch where r_j = k; the multiplicity is M_Y(nu_j^2) times the order of
    the zero (``mult_of(j)`` overrides M_Y, e.g. for partially kept clusters).
    """
    chart = region.chart
    nthr = cs.n_thresholds if n_thresholds is None else n_thresholds
    if prof.is_zero():
        return []
    # |lambda - nu_j^2| is largest on the boundary of the region
    spans = [_lam_radius(chart, region.center, region.radius, cs.nu_sq[j]) for j in range(nthr)]
    kmax = math.sqrt(max(spans)) * 1.01 + 1e-9
    zs = zeros_1d(prof, kmax, geometry)
    f = oracle_function(prof, geometry)
    acc: dict = {}
    for j in range(1, nthr + 1):
        kj = math.sqrt(spans[j - 1]) * 1.01 + 1e-9
        M = cs.multiplicity(j) if mult_of is None else mult_of(j)
        if M == 0:
            continue
        for k, order in zs:
            if abs(k) > kj:
                continue
            lam = cs.nu_sq[j - 1] + k * k
            for w in chart_preimages(chart, lam):
                if not region.contains(w):
                    continue
                r = chart.roots(np.array([w]), nthr)[0]
                if abs(r[j - 1] - k) > 1e-8 * (1 + abs(k)):
                    continue
                p = chart.point(w)
                if region.sheet is not None and p.sheet != region.sheet:
                    continue
                key = (round(w.real, 9), round(w.imag, 9))
                prev = acc.get(key)
                res = float(abs(f(np.array([k]))[0]))
                if prev is None:
                    acc[key] = [w, p, M * order, res]
                else:
                    prev[2] += M * order
    out = []
    for w, p, mult, res in acc.values():
        out.append(ResonanceRecord(p, mult, res, 0.0, chart.rm(w)))
    return out
