"""Compactly supported potentials V(t, y) in mode form.

A potential is a finite sum of terms ``profile_k(t) * C_k`` where the
profile is a piecewise function of the axial variable and C_k is a fixed
transverse coupling matrix (``None`` standing for the identity, i.e. a
separable term).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cross_section import CrossSection, Interval
from .kernels import FULL_LINE, GEOMETRIES, HALF_LINE


@dataclass(frozen=True, eq=False)
class Profile:
    """Piecewise function on [breaks[0], breaks[-1]], zero outside.

    Each piece is a float (constant) or a vectorized callable of t.
    """
    breaks: tuple
    pieces: tuple

    def __post_init__(self):
        b = tuple(float(x) for x in self.breaks)
        if len(b) != len(self.pieces) + 1 or len(self.pieces) == 0:
            raise ValueError("need len(breaks) == len(pieces) + 1 >= 2")
        if any(b1 <= b0 for b0, b1 in zip(b, b[1:])):
            raise ValueError("breaks must be strictly increasing")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "pieces", tuple(
            float(p) if not callable(p) else p for p in self.pieces))

    @classmethod
    def step(cls, v0, a=0.0, b=1.0):
        return cls((a, b), (v0,))

    @classmethod
    def steps(cls, breaks, values):
        return cls(tuple(breaks), tuple(values))

    @property
    def constant(self):
        return all(not callable(p) for p in self.pieces)

    @property
    def support(self):
        return self.breaks[0], self.breaks[-1]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for k, p in enumerate(self.pieces):
            lo, hi = self.breaks[k], self.breaks[k + 1]
            sel = (t >= lo) & (t < hi) if k < len(self.pieces) - 1 else (t >= lo) & (t <= hi)
            out = np.where(sel, p(t) if callable(p) else p, out)
        return out

    def sup(self, n=2001):
        vals = []
        for k, p in enumerate(self.pieces):
            if callable(p):
                vals.append(np.max(np.abs(p(np.linspace(self.breaks[k], self.breaks[k + 1], n)))))
            else:
                vals.append(abs(p))
        return float(max(vals))

    def is_zero(self):
        return self.constant and all(p == 0.0 for p in self.pieces)

    def mirrored(self):
        """t -> -t."""
        b = tuple(-x for x in reversed(self.breaks))
        pieces = []
        for p in reversed(self.pieces):
            pieces.append((lambda f: (lambda t: f(-np.asarray(t))))(p) if callable(p) else p)
        return Profile(b, tuple(pieces))


@dataclass(frozen=True, eq=False)
class PotentialData:
    terms: tuple                     # ((Profile, C or None), ...)
    geometry: str = FULL_LINE
    sup_norm: float | None = None
    label: str = ""
    _sup: float = field(init=False, repr=False, default=0.0)

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if not self.terms:
            raise ValueError("potential needs at least one term")
        for prof, C in self.terms:
            if C is not None:
                C = np.asarray(C)
                if C.ndim != 2 or C.shape[0] != C.shape[1]:
                    raise ValueError("coupling matrices must be square")
                if not np.allclose(C, C.conj().T, atol=1e-13):
                    raise ValueError("coupling matrices must be conjugate-symmetric")
        lo, hi = self.support
        if self.geometry == HALF_LINE and lo < 0:
            raise ValueError("half-line potential must live in t >= 0")
        sup = self.sup_norm
        if sup is None:
            sup = sum(p.sup() * (1.0 if C is None else float(np.linalg.norm(C, 2))) for p, C in self.terms)
        object.__setattr__(self, "_sup", float(sup))

    @property
    def vnorm(self):
        return self._sup

    @property
    def support(self):
        lo = min(p.breaks[0] for p, _ in self.terms)
        hi = max(p.breaks[-1] for p, _ in self.terms)
        return lo, hi

    @property
    def support_length(self):
        lo, hi = self.support
        return hi - lo

    @property
    def separable(self):
        return all(C is None for _, C in self.terms)

    @property
    def is_zero(self):
        return all(p.is_zero() for p, _ in self.terms)

    def breakpoints(self):
        return np.unique(np.concatenate([np.asarray(p.breaks) for p, _ in self.terms]))

    def profile_1d(self) -> Profile:
        if not (self.separable and len(self.terms) == 1):
            raise ValueError("not a single separable profile")
        return self.terms[0][0]

    def diagonal(self, t):
        """V(t) for a separable potential (the common diagonal)."""
        return sum(p(t) for p, _ in self.terms)

    def coupling(self, t, L):
        """Matrices V_{ll'}(t_i), shape (len(t), L, L)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros((len(t), L, L))
        eye = np.eye(L)
        for p, C in self.terms:
            if C is None:
                M = eye
            else:
                C = np.asarray(C)
                if C.shape[0] < L:
                    raise ValueError(f"coupling matrix has {C.shape[0]} modes, need {L}")
                M = C[:L, :L]
            out = out + p(t)[:, None, None] * M
        return out


def separable(profile: Profile, geometry=FULL_LINE, label="") -> PotentialData:
    return PotentialData(((profile, None),), geometry=geometry, label=label)


def zero_potential(geometry=FULL_LINE) -> PotentialData:
    return separable(Profile.step(0.0, 0.0, 1.0), geometry, label="zero")


def interval_harmonic_matrix(cs: CrossSection, p: int) -> np.ndarray:
    """Mode coupling of cos(2 pi p y / L) on a Dirichlet interval.

    With phi_l = sqrt(2/L) sin(l pi y/L) the integral reduces to Kronecker
    deltas in l +- l' +- 2p.
    """
    spec = cs.descriptor
    if not (isinstance(spec, Interval) and spec.bc == "dirichlet"):
        raise ValueError("harmonic coupling is implemented for Dirichlet intervals only")
    n = cs.n_modes
    C = np.zeros((n, n))
    for a in range(1, n + 1):
        for b in range(1, n + 1):
            C[a - 1, b - 1] = 0.5 * ((a - b == 2 * p) + (b - a == 2 * p)
                                     - (a + b == 2 * p) - (a + b == -2 * p))
    return C


def harmonic(cs: CrossSection, profile: Profile, p: int, base: Profile | None = None,
             geometry=FULL_LINE) -> PotentialData:
    """V(t, y) = base(t) + profile(t) cos(2 pi p y / L) on a Dirichlet interval."""
    terms = [(profile, interval_harmonic_matrix(cs, p))]
    sup = profile.sup()
    if base is not None:
        terms.insert(0, (base, None))
        sup += base.sup()
    return PotentialData(tuple(terms), geometry=geometry, sup_norm=sup, label=f"harmonic(p={p})")


def explicit(terms: Sequence[tuple[Profile, np.ndarray | None]], geometry=FULL_LINE,
             sup_norm: float | None = None) -> PotentialData:
    return PotentialData(tuple(terms), geometry=geometry, sup_norm=sup_norm, label="explicit")
