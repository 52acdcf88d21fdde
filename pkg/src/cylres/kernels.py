"""Mode kernels of the free resolvent on R x Y and on the half-cylinder."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cross_section import CrossSection
from .exceptions import PreconditionViolated, RamificationPoint
from .sheets import SurfacePoint, branch_r_tilde

FULL_LINE = "full_line"
HALF_LINE = "dirichlet_halfline"
GEOMETRIES = (FULL_LINE, HALF_LINE)


@dataclass(frozen=True)
class KernelRequest:
    point: SurfacePoint
    mode: int
    geometry: str
    t: float
    tp: float

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.geometry == HALF_LINE and (self.t < 0 or self.tp < 0):
            raise ValueError("half-line coordinates must be nonnegative")


def green(k, t, tp, geometry=FULL_LINE):
    """(i/2k) e^{ik|t-t'|}, minus the image term on the half-line. Broadcasts."""
    k = np.asarray(k, dtype=complex)
    g = np.exp(1j * k * np.abs(t - tp))
    if geometry == HALF_LINE:
        g = g - np.exp(1j * k * (t + tp))
    return 0.5j / k * g


def mode_kernel(cs: CrossSection, req: KernelRequest) -> complex:
    k = branch_r_tilde(cs, req.point, req.mode, boundary_ok=True)
    if k == 0:
        raise RamificationPoint(f"r~_{req.mode} vanishes at {req.point}")
    return complex(green(k, req.t, req.tp, req.geometry))


def _omitted_roots(cs: CrossSection, p: SurfacePoint, L: int) -> tuple[np.ndarray, float | None]:
    ks = np.array([branch_r_tilde(cs, p, l, boundary_ok=True) for l in range(L + 1, cs.n_modes + 1)])
    # beyond storage |r~| and Im r~ only grow once sigma^2 > Re lambda
    beyond = None
    if cs.next_sigma_sq is not None:
        beyond = complex(1j * np.sqrt(cs.next_sigma_sq - p.lam))
    return ks, beyond


def mode_tail_bound(cs: CrossSection, p: SurfacePoint, support, L: int, vnorm: float,
                    tau_min: float = 1e-3) -> float:
    """Bound for the operator norm of the omitted block l > L of V R_0 chi.

    Every omitted mode satisfies ``|kernel| <= 1/(2|r~_l|)``, and the omitted
    block is block-diagonal in l after projecting onto modes, so its norm is
    controlled by the largest block, ``vnorm * a / (2 min_{l>L} |r~_l|)``.
    """
    if vnorm == 0:
        return 0.0
    a = float(support[1] - support[0])
    ks, beyond = _omitted_roots(cs, p, L)
    cand = list(ks)
    if beyond is not None:
        if cs.next_sigma_sq < p.lam.real:
            raise PreconditionViolated("first unstored eigenvalue lies below Re lambda")
        cand.append(beyond)
    elif L >= cs.n_modes:
        raise PreconditionViolated("no information about omitted modes")
    cand = np.array(cand)
    if np.any(cand.imag < tau_min):
        l = L + 1 + int(np.argmin(cand.imag))
        raise PreconditionViolated(f"Im r~_{l} = {cand.imag.min():.3g} < tau_min={tau_min}")
    return vnorm * a / (2.0 * float(np.min(np.abs(cand))))


def cutoff_for(cs: CrossSection, lam_re_max: float, support, vnorm: float, tol: float) -> int:
    """Smallest L whose omitted modes all have |r~| >= vnorm*a/(2 tol) for Re lambda <= lam_re_max.

    Uses |r~_l| >= (sigma_l^2 - Re lambda)^(1/2), so the bound holds on the
    whole region once it holds at its largest real part.
    """
    if vnorm == 0:
        return 1
    a = float(support[1] - support[0])
    need = (vnorm * a / (2.0 * tol)) ** 2 + lam_re_max
    idx = np.flatnonzero(cs.sigma_sq >= need)
    if len(idx) == 0:
        if cs.next_sigma_sq is not None and cs.next_sigma_sq >= need:
            return cs.n_modes
        raise PreconditionViolated(
            f"catalog too short: need sigma^2 >= {need:.4g}, stored up to {cs.sigma_sq[-1]:.4g}")
    return max(1, int(idx[0]))


def modes_needed(cs: CrossSection, L: int) -> int:
    """Number of thresholds touched by the first L modes."""
    return int(cs.mode_threshold[L - 1]) + 1

