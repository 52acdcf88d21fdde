"""Sheets of the Riemann surface Z-hat and branch evaluation of r_j.

A sheet is the finite set E of thresholds whose square root
r_j = (lambda - nu_j^2)^(1/2) has Im r_j < 0; the physical sheet is E = {}.
Points on the cut [nu_1^2, inf) carry a side flag instead of an epsilon
offset.

Charts give analytic coordinates on pieces of Z-hat:

* ``LambdaChart``   w = lambda on a fixed sheet (off the cut);
* ``RampChart``     w = r_m near the ramification points (nu_m^2)_+/-;
* ``BoundaryChart`` w = lambda across the cut segment (nu_J^2, nu_{J+1}^2);
* ``R1Chart``       w = r_1 on a fixed sheet.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .cross_section import CrossSection, threshold_of_mode
from .exceptions import CutError, RamificationPoint


class Side(enum.Enum):
    OFF_CUT = "off_cut"
    FROM_ABOVE = "from_above"
    FROM_BELOW = "from_below"

    def flipped(self):
        if self is Side.FROM_ABOVE:
            return Side.FROM_BELOW
        if self is Side.FROM_BELOW:
            return Side.FROM_ABOVE
        return self


@dataclass(frozen=True, order=True)
class Sheet:
    flipped: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "flipped", frozenset(int(j) for j in self.flipped))
        if any(j < 1 for j in self.flipped):
            raise ValueError("threshold indices are 1-based")

    @classmethod
    def of(cls, *js):
        return cls(frozenset(js))

    @classmethod
    def first(cls, J):
        """The sheet {1,...,J} reached from the physical one across (nu_J^2, nu_{J+1}^2)."""
        return cls(frozenset(range(1, J + 1)))

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if not (text.startswith("[") and text.endswith("]")):
            raise ValueError(f"sheet must look like [1,2], got {text!r}")
        body = text[1:-1].strip()
        return cls(frozenset(int(s) for s in body.split(",")) if body else frozenset())

    def __contains__(self, j):
        return j in self.flipped

    def __xor__(self, other):
        o = other.flipped if isinstance(other, Sheet) else frozenset(other)
        return Sheet(self.flipped ^ o)

    def signs(self, n):
        return np.array([-1.0 if j in self.flipped else 1.0 for j in range(1, n + 1)])

    def is_physical(self):
        return not self.flipped

    def __str__(self):
        return "[" + ",".join(str(j) for j in sorted(self.flipped)) + "]"


PHYSICAL = Sheet()


@dataclass(frozen=True)
class SurfacePoint:
    sheet: Sheet
    lam: complex
    side: Side = Side.OFF_CUT

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))

    def check(self, cs: CrossSection):
        on_axis = self.lam.imag == 0.0
        on_cut = on_axis and self.lam.real >= cs.nu_sq[0]
        if on_cut and self.side is Side.OFF_CUT:
            raise CutError(f"lambda={self.lam} lies on the cut; a side flag is required")
        if not on_cut and self.side is not Side.OFF_CUT:
            raise CutError(f"side flag given for off-cut lambda={self.lam}")
        return self

    def __str__(self):
        s = "" if self.side is Side.OFF_CUT else f" ({self.side.value})"
        return f"{self.sheet}:{self.lam}{s}"


def physical(lam, side=Side.OFF_CUT):
    return SurfacePoint(PHYSICAL, lam, side)


def sqrt_upper(x):
    """Square root with Im >= 0, cut along [0, inf)."""
    return 1j * np.sqrt(-np.asarray(x, dtype=complex))


def _base_root(x: complex, side: Side) -> complex:
    if x.imag != 0.0 or side is Side.OFF_CUT:
        return complex(sqrt_upper(x))
    if x.real < 0:
        return 1j * np.sqrt(-x.real)
    s = np.sqrt(x.real)
    return complex(s if side is Side.FROM_ABOVE else -s)


def branch_r(cs: CrossSection, p: SurfacePoint, j: int, boundary_ok: bool = False) -> complex:
    if not 1 <= j <= cs.n_thresholds:
        raise IndexError(f"threshold {j} outside catalog")
    p.check(cs)
    x = p.lam - cs.nu_sq[j - 1]
    if x == 0:
        if boundary_ok:
            return 0j
        raise RamificationPoint(f"lambda = nu_{j}^2")
    r = _base_root(x, p.side)
    return -r if j in p.sheet else r


def branch_r_tilde(cs: CrossSection, p: SurfacePoint, l: int, boundary_ok: bool = False) -> complex:
    return branch_r(cs, p, threshold_of_mode(cs, l), boundary_ok)


def all_roots(cs: CrossSection, p: SurfacePoint, n: int | None = None) -> np.ndarray:
    """r_1..r_n at p (n defaults to every stored threshold)."""
    n = cs.n_thresholds if n is None else n
    return np.array([branch_r(cs, p, j) for j in range(1, n + 1)])


def cross_cut(cs: CrossSection, p: SurfacePoint, k: int) -> SurfacePoint:
    p.check(cs)
    lam = p.lam
    if lam.imag != 0.0 or p.side is Side.OFF_CUT:
        raise CutError("cross_cut needs a real lambda with a side flag")
    lo = cs.nu_sq[k - 1] if 1 <= k <= cs.n_thresholds else None
    hi = cs.nu_sq[k] if k < cs.n_thresholds else np.inf
    if lo is None or not lo < lam.real < hi:
        if any(lam.real == v for v in cs.nu_sq):
            raise RamificationPoint(f"lambda={lam.real} is a threshold")
        raise CutError(f"lambda={lam.real} is not on cut segment {k}")
    return SurfacePoint(p.sheet ^ range(1, k + 1), lam, p.side.flipped())


def involution_w(p: SurfacePoint, E) -> SurfacePoint:
    return SurfacePoint(p.sheet ^ E, p.lam, p.side)


def local_sheets_at(cs: CrossSection, m: int, side: int = 1) -> list[Sheet]:
    """Sheets whose closures contain the ramification point over nu_m^2."""
    if not 1 <= m <= cs.n_thresholds:
        raise IndexError(f"threshold {m} outside catalog")
    if m == 1:
        return [PHYSICAL, Sheet.of(1)]
    return [PHYSICAL, Sheet.first(m - 1), Sheet.first(m), Sheet.of(m)]


# ---------------------------------------------------------------- charts

def _sheet_from_roots(roots: np.ndarray) -> Sheet:
    return Sheet(frozenset(int(j) + 1 for j in np.flatnonzero(roots.imag < 0)))


class Chart:
    """Analytic coordinate w on a piece of Z-hat."""

    index_m: int | None = None

    def __init__(self, cs: CrossSection):
        self.cs = cs

    def lam(self, w):
        raise NotImplementedError

    def roots(self, w, n: int) -> np.ndarray:
        """Array of shape w.shape + (n,) holding r_1..r_n."""
        raise NotImplementedError

    def point(self, w) -> SurfacePoint:
        w = complex(w)
        lam = complex(self.lam(w))
        r = self.roots(np.array([w]), self.cs.n_thresholds)[0]
        if lam.imag == 0.0 and lam.real >= self.cs.nu_sq[0]:
            flips = []
            for j in range(1, self.cs.n_thresholds + 1):
                base = _base_root(lam - self.cs.nu_sq[j - 1], Side.FROM_ABOVE)
                if base != 0 and (r[j - 1] / base).real < 0:
                    flips.append(j)
            return SurfacePoint(Sheet(frozenset(flips)), lam, Side.FROM_ABOVE)
        return SurfacePoint(_sheet_from_roots(r), lam)

    def rm(self, w):
        return None


class LambdaChart(Chart):
    def __init__(self, cs, sheet: Sheet = PHYSICAL):
        super().__init__(cs)
        self.sheet = sheet

    def lam(self, w):
        return np.asarray(w, dtype=complex)

    def roots(self, w, n):
        w = np.asarray(w, dtype=complex)
        r = sqrt_upper(w[..., None] - self.cs.nu_sq[:n])
        return r * self.sheet.signs(n)

    def __repr__(self):
        return f"LambdaChart({self.sheet})"


class RampChart(Chart):
    """w = r_m; side=+1 puts the physical upper half-plane in the first quadrant."""

    def __init__(self, cs, m: int, side: int = 1):
        super().__init__(cs)
        if not 1 <= m <= cs.n_thresholds:
            raise IndexError(f"threshold {m} outside catalog")
        if side not in (1, -1):
            raise ValueError("side must be +1 or -1")
        self.m, self.side = m, side
        self.index_m = m

    def lam(self, w):
        return self.cs.nu_sq[self.m - 1] + np.asarray(w, dtype=complex) ** 2

    def roots(self, w, n):
        w = np.asarray(w, dtype=complex)
        w2 = (w * w)[..., None]
        nu = self.cs.nu_sq[:n]
        c = self.cs.nu_sq[self.m - 1] - nu
        out = np.empty(w.shape + (n,), dtype=complex)
        lo = np.arange(n) < self.m - 1
        hi = np.arange(n) > self.m - 1
        out[..., lo] = self.side * np.sqrt(c[lo] + w2)
        out[..., hi] = 1j * np.sqrt(-c[hi] - w2)
        if self.m <= n:
            out[..., self.m - 1] = w
        return out

    def branch_radius(self):
        """Distance from w=0 to the nearest other branch point of the chart."""
        nu = self.cs.nu_sq
        gaps = []
        if self.m >= 2:
            gaps.append(nu[self.m - 1] - nu[self.m - 2])
        if self.m < len(nu):
            gaps.append(nu[self.m] - nu[self.m - 1])
        return float(np.sqrt(min(gaps))) if gaps else np.inf

    def quadrant_sheets(self):
        """Sheet of each open quadrant I..IV."""
        probes = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) * 1e-3 * min(1.0, self.branch_radius())
        r = self.roots(probes, self.cs.n_thresholds)
        return [_sheet_from_roots(ri) for ri in r]

    def rm(self, w):
        return complex(w)

    def __repr__(self):
        return f"RampChart(m={self.m}, side={'+' if self.side > 0 else '-'})"


class BoundaryChart(Chart):
    """w = lambda continued across the cut segment (nu_J^2, nu_{J+1}^2).

    With side=+1 the upper half-plane is the physical sheet and the lower
    half-plane is the sheet {1..J}.
    """

    def __init__(self, cs, J: int, side: int = 1):
        super().__init__(cs)
        self.J, self.side = J, side

    def lam(self, w):
        return np.asarray(w, dtype=complex)

    def roots(self, w, n):
        w = np.asarray(w, dtype=complex)[..., None]
        nu = self.cs.nu_sq[:n]
        out = 1j * np.sqrt(nu - w)
        k = min(self.J, n)
        out[..., :k] = self.side * np.sqrt(w - nu[:k])
        return out

    def segment(self):
        lo = self.cs.nu_sq[self.J - 1] if self.J >= 1 else -np.inf
        hi = self.cs.nu_sq[self.J] if self.J < self.cs.n_thresholds else np.inf
        return lo, hi

    def __repr__(self):
        return f"BoundaryChart(J={self.J}, side={self.side:+d})"


class R1Chart(Chart):
    """w = r_1 on a fixed sheet; valid in the half-plane Im w < 0 iff 1 in E."""

    def __init__(self, cs, sheet: Sheet):
        super().__init__(cs)
        self.sheet = sheet
        self.index_m = 1

    def lam(self, w):
        return self.cs.nu_sq[0] + np.asarray(w, dtype=complex) ** 2

    def roots(self, w, n):
        w = np.asarray(w, dtype=complex)
        lam = self.lam(w)[..., None]
        out = sqrt_upper(lam - self.cs.nu_sq[:n]) * self.sheet.signs(n)
        out[..., 0] = w
        return out

    def rm(self, w):
        return complex(w)

    def __repr__(self):
        return f"R1Chart({self.sheet})"
