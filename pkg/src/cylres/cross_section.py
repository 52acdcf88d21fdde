"""Transverse spectral data of the cross-section Y.

Eigenvalues sigma_l^2 of the Laplacian on Y are stored with multiplicity,
together with the distinct thresholds nu_j^2 and their multiplicities.
Indices visible to callers (sigma-index ``l`` and threshold index ``j``)
are 1-based; the arrays themselves are ordinary 0-based numpy arrays.
"""
from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .exceptions import CatalogError, H1Violation

DEDUP_RTOL = 1e-10
DEFAULT_TRUNCATE = 64


# ---------------------------------------------------------------- descriptors

@dataclass(frozen=True)
class Interval:
    length: float
    bc: str = "dirichlet"

    def __post_init__(self):
        if not self.length > 0:
            raise CatalogError(f"interval length must be positive, got {self.length}")
        if self.bc not in ("dirichlet", "neumann"):
            raise CatalogError(f"unknown boundary condition {self.bc!r}")

    @property
    def dim_total(self):
        return 2

    def _stream(self, tag):
        scale = (math.pi / self.length) ** 2
        k = 1 if self.bc == "dirichlet" else 0
        while True:
            yield (k * k * scale, k * k, scale, tag)
            k += 1


@dataclass(frozen=True)
class Circle:
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise CatalogError("circle radius must be positive")

    @property
    def dim_total(self):
        return 2

    def _stream(self, tag):
        scale = 1.0 / self.radius ** 2
        yield (0.0, 0, scale, tag)
        k = 1
        while True:
            v = k * k * scale
            yield (v, k * k, scale, tag)
            yield (v, k * k, scale, tag)
            k += 1


@dataclass(frozen=True)
class Sphere:
    d: int = 2

    def __post_init__(self):
        if self.d < 1:
            raise CatalogError("sphere dimension must be >= 1")

    @property
    def dim_total(self):
        return self.d + 1

    def _stream(self, tag):
        d = self.d
        k = 0
        while True:
            m = math.comb(k + d, d) - (math.comb(k + d - 2, d) if k >= 2 else 0)
            key = k * (k + d - 1)
            for _ in range(m):
                yield (float(key), key, 1.0, tag)
            k += 1


@dataclass(frozen=True)
class Explicit:
    """Finite list of (sigma^2, multiplicity) pairs."""
    pairs: tuple
    dim: int = 2

    def __post_init__(self):
        if len(self.pairs) == 0:
            raise CatalogError("explicit spectrum is empty")
        for v, m in self.pairs:
            if int(m) < 1 or v < 0:
                raise CatalogError(f"bad explicit eigenvalue entry ({v}, {m})")

    @property
    def dim_total(self):
        return self.dim

    def _stream(self, tag):
        for v, m in sorted(self.pairs, key=lambda p: p[0]):
            for _ in range(int(m)):
                yield (float(v), None, None, tag)


@dataclass(frozen=True)
class DisjointUnion:
    parts: tuple

    def __post_init__(self):
        if len(self.parts) == 0:
            raise CatalogError("disjoint union of nothing")
        dims = {p.dim_total for p in self.parts}
        if len(dims) != 1:
            raise CatalogError("components of a disjoint union must share a dimension")

    @property
    def dim_total(self):
        return self.parts[0].dim_total

    def _stream(self, tag):
        streams = [p._stream(f"{tag}{i}" if tag else str(i)) for i, p in enumerate(self.parts)]
        return heapq.merge(*streams, key=lambda e: e[0])


@dataclass(frozen=True)
class TwoEnded:
    """Cross-section of both ends of R x Y0, i.e. Y0 disjoint-union Y0."""
    base: object

    @property
    def dim_total(self):
        return self.base.dim_total

    def _stream(self, tag):
        left = self.base._stream(tag + "L")
        right = self.base._stream(tag + "R")
        return heapq.merge(left, right, key=lambda e: (e[0], e[3]))


# ---------------------------------------------------------------- catalog

@dataclass(frozen=True, eq=False)
class CrossSection:
    dim_total: int
    sigma_sq: np.ndarray
    nu_sq: np.ndarray
    mult: np.ndarray
    mode_threshold: np.ndarray      # 0-based threshold of each sigma
    labels: tuple
    next_sigma_sq: float | None     # first omitted eigenvalue, None if unknown
    descriptor: object = field(default=None, repr=False)

    @property
    def n_modes(self):
        return len(self.sigma_sq)

    @property
    def n_thresholds(self):
        return len(self.nu_sq)

    def nu(self, j):
        return math.sqrt(self.nu_sq[j - 1])

    def multiplicity(self, j):
        return int(self.mult[j - 1])

    def modes_of(self, j):
        """1-based sigma-indices belonging to threshold j."""
        return [int(l) + 1 for l in np.flatnonzero(self.mode_threshold == j - 1)]

    def end_tag(self, l):
        return self.labels[l - 1]

    def rebuild_sigma(self):
        return np.repeat(self.nu_sq, self.mult)


def _same(a, b):
    if a[1] is not None and b[1] is not None and a[2] == b[2]:
        return a[1] == b[1]
    return abs(a[0] - b[0]) <= DEDUP_RTOL * max(1.0, abs(a[0]), abs(b[0]))


def _clusters(stream: Iterator) -> Iterator[list]:
    cur = []
    for e in stream:
        if cur and not _same(cur[0], e):
            yield cur
            cur = []
        cur.append(e)
    if cur:
        yield cur


def build_catalog(spec, truncate: int | None = None, n_thresholds: int | None = None) -> CrossSection:
    """Populate the spectrum of ``spec``.

    ``truncate`` keeps the first that many eigenvalues (counted with
    multiplicity, completing a cluster that would otherwise be split);
    ``n_thresholds`` keeps that many distinct thresholds instead.
    """
    if truncate is not None and n_thresholds is not None:
        raise CatalogError("give truncate or n_thresholds, not both")
    if n_thresholds is None and truncate is None:
        truncate = DEFAULT_TRUNCATE
    if (truncate is not None and truncate < 1) or (n_thresholds is not None and n_thresholds < 1):
        raise CatalogError("truncation count must be >= 1")

    kept, count, nxt = [], 0, None
    for cl in _clusters(spec._stream("")):
        full = (n_thresholds is not None and len(kept) >= n_thresholds) or \
               (truncate is not None and count >= truncate)
        if full:
            nxt = cl[0][0]
            break
        kept.append(cl)
        count += len(cl)
    if not kept:
        raise CatalogError("empty spectrum")

    sigma, labels, thr = [], [], []
    for j, cl in enumerate(kept):
        for e in cl:
            sigma.append(cl[0][0])
            labels.append(e[3])
            thr.append(j)
    nu = np.array([cl[0][0] for cl in kept], dtype=float)
    mult = np.array([len(cl) for cl in kept], dtype=int)
    return CrossSection(
        dim_total=spec.dim_total,
        sigma_sq=np.array(sigma, dtype=float),
        nu_sq=nu,
        mult=mult,
        mode_threshold=np.array(thr, dtype=int),
        labels=tuple(labels),
        next_sigma_sq=nxt,
        descriptor=spec,
    )


def threshold_of_mode(cs: CrossSection, l: int) -> int:
    if not 1 <= l <= cs.n_modes:
        raise IndexError(f"sigma-index {l} outside stored range 1..{cs.n_modes}")
    return int(cs.mode_threshold[l - 1]) + 1


# ---------------------------------------------------------------- (H1)

@dataclass(frozen=True)
class H1Certificate:
    alpha: float
    m_start: int
    verified_upto: int


def gap_ratios(cs: CrossSection, m_start: int) -> tuple[np.ndarray, np.ndarray]:
    """(nu_m^2 - nu_{m-1}^2)/nu_m for stored m >= m_start, with nu_0^2 := 0."""
    ms, rs = [], []
    for m in range(max(m_start, 1), cs.n_thresholds + 1):
        nu_m = math.sqrt(cs.nu_sq[m - 1])
        if nu_m == 0.0:
            continue
        prev = cs.nu_sq[m - 2] if m >= 2 else 0.0
        ms.append(m)
        rs.append((cs.nu_sq[m - 1] - prev) / nu_m)
    return np.array(ms, dtype=int), np.array(rs)


def h1_certificate(cs: CrossSection, m_start: int) -> H1Certificate:
    if cs.n_thresholds < m_start + 1:
        raise CatalogError(f"need at least {m_start + 1} thresholds for m_start={m_start}")
    ms, rs = gap_ratios(cs, m_start)
    if len(rs) == 0:
        raise CatalogError("no usable thresholds")
    alpha = float(rs.min())
    if alpha <= 0:
        raise H1Violation("gap ratio vanishes")
    # a minimum that keeps halving across the stored range means inf -> 0
    if len(rs) >= 8:
        half = len(rs) // 2
        if rs[half:].min() < 0.5 * rs[:half].min():
            raise H1Violation(
                f"gap ratios decay across the stored range: min {rs[:half].min():.3g} "
                f"on the first half, {rs[half:].min():.3g} on the second")
    return H1Certificate(alpha=alpha, m_start=m_start, verified_upto=int(ms[-1]))


def weyl_constant(cs: CrossSection) -> float:
    """Smallest C with M_Y(nu_m^2) <= C m^(n-2) on the stored thresholds."""
    m = np.arange(1, cs.n_thresholds + 1, dtype=float)
    return float(np.max(cs.mult / m ** (cs.dim_total - 2)))


def catalog_csv(cs: CrossSection) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["l", "sigma_sq", "j", "nu_sq", "end_tag"])
    for l in range(1, cs.n_modes + 1):
        j = threshold_of_mode(cs, l)
        w.writerow([l, repr(float(cs.sigma_sq[l - 1])), j, repr(float(cs.nu_sq[j - 1])), cs.labels[l - 1]])
    return buf.getvalue()


def describe(spec) -> str:
    if isinstance(spec, Interval):
        return f"interval(L={spec.length!r},{spec.bc})"
    if isinstance(spec, Circle):
        return f"circle(R={spec.radius!r})"
    if isinstance(spec, Sphere):
        return f"sphere(d={spec.d})"
    if isinstance(spec, Explicit):
        return f"explicit({len(spec.pairs)} entries)"
    if isinstance(spec, DisjointUnion):
        return "union(" + ",".join(describe(p) for p in spec.parts) + ")"
    if isinstance(spec, TwoEnded):
        return f"two_ended({describe(spec.base)})"
    return repr(spec)
