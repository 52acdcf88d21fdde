"""Carleman's formula for functions holomorphic in the closed upper half plane.

For F with F(0) = 1 and zeros a_k = r_k e^{i theta_k} in Im zeta > 0,

    sum_{r_k <= R} (1/r_k - r_k/R^2) sin theta_k
        = 1/(pi R) int_0^pi log|F(R e^{i theta})| sin theta d theta
        + 1/(2 pi) int_0^R (1/x^2 - 1/R^2) log|F(x) F(-x)| dx
        + Im F'(0) / 2.

Test functions are finite products of normalized Blaschke factors, linear
factors 1 - zeta/b and exponentials exp(i c zeta). Each factor knows its
own log-modulus in a cancellation-free form, which matters in the segment
integral where log|F(x) F(-x)| = O(x^2) is divided by x^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .exceptions import QuadratureError


@dataclass(frozen=True)
class Factor:
    kind: str           # "blaschke", "linear" or "exp"
    param: complex

    def __post_init__(self):
        if self.kind not in ("blaschke", "linear", "exp"):
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if self.kind == "blaschke" and not complex(self.param).imag > 0:
            raise ValueError("Blaschke zeros must lie in the open upper half plane")
        if self.kind == "linear" and complex(self.param) == 0:
            raise ValueError("linear factor needs b != 0")
        if self.kind == "exp" and not (complex(self.param).imag == 0 and complex(self.param).real >= 0):
            raise ValueError("exp factor needs a real c >= 0 to stay bounded in the upper half plane")

    def value(self, z):
        z = np.asarray(z, dtype=complex)
        p = complex(self.param)
        if self.kind == "blaschke":
            return (p.conjugate() / p) * (z - p) / (z - p.conjugate())
        if self.kind == "linear":
            return 1.0 - z / p
        return np.exp(1j * p.real * z)

    def log_abs(self, z):
        z = np.asarray(z, dtype=complex)
        p = complex(self.param)
        if self.kind == "blaschke":
            # |z-a|^2 - |z-conj a|^2 = -4 Im z Im a
            den = np.abs(z - p.conjugate()) ** 2
            return 0.5 * np.log1p(-4.0 * z.imag * p.imag / den)
        if self.kind == "linear":
            w = z / p
            return 0.5 * np.log1p(np.abs(w) ** 2 - 2.0 * w.real)
        return -p.real * z.imag

    def dlog0(self) -> complex:
        p = complex(self.param)
        if self.kind == "blaschke":
            return -1.0 / p + 1.0 / p.conjugate()
        if self.kind == "linear":
            return -1.0 / p
        return 1j * p.real

    def upper_zeros(self):
        p = complex(self.param)
        if self.kind in ("blaschke", "linear") and p.imag > 0:
            return [p]
        return []


@dataclass(frozen=True)
class TestFunction:
    name: str
    factors: tuple

    def __call__(self, z):
        out = np.ones_like(np.asarray(z, dtype=complex))
        for f in self.factors:
            out = out * f.value(z)
        return out

    def log_abs(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape)
        for f in self.factors:
            out = out + f.log_abs(z)
        return out

    def zeros(self):
        return [a for f in self.factors for a in f.upper_zeros()]

    def im_derivative0(self) -> float:
        # F(0) = 1, so F'(0) = (log F)'(0)
        return float(sum(f.dlog0() for f in self.factors).imag)


CATALOG = {
    "one": TestFunction("one", ()),
    "blaschke_i": TestFunction("blaschke_i", (Factor("blaschke", 1j),)),
    "mixed": TestFunction("mixed", (Factor("blaschke", 1 + 2j), Factor("linear", 0.5 - 1.5j),
                                    Factor("exp", 0.7))),
}


def get_function(name: str) -> TestFunction:
    try:
        return CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown test function {name!r}; known: {', '.join(sorted(CATALOG))}") from None


def zero_side(F: TestFunction, R: float) -> float:
    tot = 0.0
    for a in F.zeros():
        r = abs(a)
        if r <= R:
            tot += (1.0 / r - r / R ** 2) * math.sin(math.atan2(a.imag, a.real))
    return tot


def _arc_integrand(F, R):
    return lambda th: float(F.log_abs(R * np.exp(1j * th))) * math.sin(th)


def _segment_integrand(F, R):
    def g(x):
        if x == 0.0:
            return 0.0 if not F.factors else _segment_limit(F)
        return (1.0 / x ** 2 - 1.0 / R ** 2) * float(F.log_abs(x) + F.log_abs(-x))
    return g


def _segment_limit(F, h=1e-4):
    # log|F(x)F(-x)| / x^2 at x -> 0 by Richardson on even samples
    a = float(F.log_abs(h) + F.log_abs(-h)) / h ** 2
    b = float(F.log_abs(2 * h) + F.log_abs(-2 * h)) / (2 * h) ** 2
    return (4 * a - b) / 3


def integral_side(F: TestFunction, R: float, method: str = "adaptive", n: int = 64) -> float:
    """Right-hand side. ``adaptive`` uses scipy's QUADPACK; ``gl`` an n-point
    composite Gauss-Legendre rule (8 panels per integral)."""
    fa, fs = _arc_integrand(F, R), _segment_integrand(F, R)
    if method == "adaptive":
        ia, ea = integrate.quad(fa, 0.0, math.pi, epsabs=1e-13, epsrel=1e-12, limit=400)
        is_, es = integrate.quad(fs, 0.0, R, epsabs=1e-13, epsrel=1e-12, limit=400)
        if ea > 1e-8 or es > 1e-8:
            raise QuadratureError(f"quadrature error estimates {ea:.2g}, {es:.2g}")
    elif method == "gl":
        ia = _composite_gl(fa, 0.0, math.pi, n)
        is_ = _composite_gl(fs, 0.0, R, n)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ia / (math.pi * R) + is_ / (2 * math.pi) + 0.5 * F.im_derivative0()


def _composite_gl(f, a, b, n, panels=8):
    x, w = np.polynomial.legendre.leggauss(max(1, n // panels))
    edges = np.linspace(a, b, panels + 1)
    tot = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        xs = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        tot += 0.5 * (hi - lo) * sum(wi * f(xi) for wi, xi in zip(w, xs))
    return float(tot)


@dataclass(frozen=True)
class CarlemanResult:
    name: str
    R: float
    zero_side: float
    integral_side: float

    @property
    def residual(self):
        return abs(self.zero_side - self.integral_side)


def carleman_check(F: TestFunction | str, R: float, method: str = "adaptive", n: int = 64) -> CarlemanResult:
    if isinstance(F, str):
        F = get_function(F)
    if not R > 0:
        raise ValueError("R must be positive")
    return CarlemanResult(F.name, float(R), zero_side(F, R), integral_side(F, R, method, n))
