"""Rank-based Gaussianization, covariance blocks, and the Gaussian MI bound.

Foundational statistics used everywhere else: the standard-normal quantile,
empirical CDFs, monotone normal-scores maps (with randomized tie breaking so
atomic inputs still come out exactly marginally normal), covariance
estimation, and the closed-form Gaussian lower bound on mutual information
of two standardized blocks.

All information quantities are in nats unless a function name says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import (
    DomainError,
    InsufficientDataError,
    InvalidCovarianceError,
)

NATS_PER_BIT = float(np.log(2.0))

# Correlations at or above this magnitude are treated as saturated when
# converting to an information value.
SATURATION_RHO = 1.0 - 1e-12

# Relative ridge added to covariance blocks before taking determinants.
COV_RIDGE = 1e-10


def nats_to_bits(x):
    return np.asarray(x, dtype=float) / NATS_PER_BIT if np.ndim(x) else float(x) / NATS_PER_BIT


def bits_to_nats(x):
    return np.asarray(x, dtype=float) * NATS_PER_BIT if np.ndim(x) else float(x) * NATS_PER_BIT


def normal_quantile(p):
    """Standard-normal inverse CDF.

    Parameters
    ----------
    p : float or array_like
        Probabilities; every entry must lie strictly inside (0, 1).

    Returns
    -------
    float or ndarray
        Phi^{-1}(p), accurate to well below 1e-9 absolute error.
    """
    arr = np.asarray(p, dtype=float)
    if arr.size == 0 or not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("normal_quantile requires probabilities strictly in (0, 1)")
    out = ndtri(arr)
    return float(out) if np.ndim(p) == 0 else out


def rank_quantile_grid(n: int) -> np.ndarray:
    """Normal scores at the mid-rank plotting positions (i - 0.5) / n, i = 1..n."""
    if n < 2:
        raise InsufficientDataError("need at least 2 samples for a rank grid")
    return ndtri((np.arange(1, n + 1) - 0.5) / n)


@dataclass(frozen=True)
class EmpiricalCdf:
    """Right-continuous empirical CDF of a one-dimensional sample."""

    sorted_values: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        values = np.asarray(self.sorted_values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise InsufficientDataError("EmpiricalCdf needs at least 2 values")
        if np.any(np.diff(values) < 0):
            raise DomainError("EmpiricalCdf values must be nondecreasing")
        object.__setattr__(self, "sorted_values", values)
        object.__setattr__(self, "n", values.size)

    @classmethod
    def from_samples(cls, x) -> "EmpiricalCdf":
        return cls(np.sort(np.asarray(x, dtype=float)))

    def __call__(self, x):
        pos = np.searchsorted(self.sorted_values, np.asarray(x, dtype=float), side="right")
        out = pos / self.n
        return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class MonotoneMap:
    """A fitted strictly increasing map, piecewise linear between knots.

    Used both for normal-scores transforms and their inverses.  Outside the
    knot range the map either clamps to the terminal values or continues
    linearly with the terminal slope.
    """

    knots_in: np.ndarray
    knots_out: np.ndarray
    extrapolation: str = "clamp"

    def __post_init__(self):
        kin = np.asarray(self.knots_in, dtype=float)
        kout = np.asarray(self.knots_out, dtype=float)
        if kin.ndim != 1 or kin.shape != kout.shape or kin.size < 1:
            raise DomainError("MonotoneMap knots must be equal-length 1-D arrays")
        if np.any(np.diff(kin) <= 0) or np.any(np.diff(kout) <= 0):
            raise DomainError("MonotoneMap knots must be strictly increasing")
        if self.extrapolation not in ("clamp", "linear-tail"):
            raise DomainError(f"unknown extrapolation mode {self.extrapolation!r}")
        object.__setattr__(self, "knots_in", kin)
        object.__setattr__(self, "knots_out", kout)

    def __call__(self, x):
        xs = np.asarray(x, dtype=float)
        kin, kout = self.knots_in, self.knots_out
        if kin.size == 1:
            out = np.full_like(xs, kout[0], dtype=float)
        else:
            out = np.interp(xs, kin, kout)
            if self.extrapolation == "linear-tail":
                lo_slope = (kout[1] - kout[0]) / (kin[1] - kin[0])
                hi_slope = (kout[-1] - kout[-2]) / (kin[-1] - kin[-2])
                lo = xs < kin[0]
                hi = xs > kin[-1]
                out = np.where(lo, kout[0] + lo_slope * (xs - kin[0]), out)
                out = np.where(hi, kout[-1] + hi_slope * (xs - kin[-1]), out)
        return float(out) if np.ndim(x) == 0 else out

    def inverse(self) -> "MonotoneMap":
        return MonotoneMap(self.knots_out, self.knots_in, self.extrapolation)


def marginal_gaussianize(x, seed=None, *, extrapolation: str = "clamp"):
    """Transform a scalar sample to exact marginal normal scores.

    Ranks are mapped to the fixed grid ``Phi^{-1}((i - 0.5) / n)``; ties are
    broken by seeded uniform randomization, so atomic or mixed inputs still
    produce an exact draw-free normal-scores sample.

    Parameters
    ----------
    x : array_like, shape (n,)
    seed : int, Generator or None
        Drives tie randomization only; distinct inputs are seed-independent.

    Returns
    -------
    u : ndarray, shape (n,)
        Transformed values; ``np.sort(u)`` equals the rank grid bit for bit.
    fitted : MonotoneMap
        Increasing map from input values to normal scores (tied inputs get
        their group-average score), evaluable on new points.
    """
    xs = np.asarray(x, dtype=float).ravel()
    n = xs.size
    if n < 2:
        raise InsufficientDataError("marginal_gaussianize needs at least 2 samples")
    if not np.all(np.isfinite(xs)):
        raise DomainError("marginal_gaussianize requires finite inputs")
    rng = np.random.default_rng(seed)
    # lexsort: primary key x, secondary key a uniform draw to scatter ties
    order = np.lexsort((rng.random(n), xs))
    ranks = np.empty(n, dtype=np.intp)
    ranks[order] = np.arange(n)
    grid = rank_quantile_grid(n)
    u = grid[ranks]

    xs_sorted = xs[order]
    first = np.empty(n, dtype=bool)
    first[0] = True
    np.not_equal(xs_sorted[1:], xs_sorted[:-1], out=first[1:])
    starts = np.flatnonzero(first)
    knots_in = xs_sorted[starts]
    counts = np.diff(np.append(starts, n))
    knots_out = np.add.reduceat(grid, starts) / counts
    fitted = MonotoneMap(knots_in, knots_out, extrapolation)
    return u, fitted


def covariance(samples) -> np.ndarray:
    """Unbiased sample covariance (divisor n - 1), symmetric by construction."""
    a = np.asarray(samples, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    n = a.shape[0]
    if n < 2:
        raise InsufficientDataError("covariance needs at least 2 samples")
    c = np.atleast_2d(np.cov(a, rowvar=False, ddof=1))
    return (c + c.T) / 2.0


@dataclass(frozen=True)
class CovarianceBlocks:
    """Covariance of a stacked pair (U, V), stored as the three blocks."""

    c_u: np.ndarray
    c_v: np.ndarray
    c_uv: np.ndarray

    def __post_init__(self):
        cu = np.atleast_2d(np.asarray(self.c_u, dtype=float))
        cv = np.atleast_2d(np.asarray(self.c_v, dtype=float))
        cuv = np.atleast_2d(np.asarray(self.c_uv, dtype=float))
        if cu.shape[0] != cu.shape[1] or cv.shape[0] != cv.shape[1]:
            raise InvalidCovarianceError("marginal covariance blocks must be square")
        if cuv.shape != (cu.shape[0], cv.shape[0]):
            raise InvalidCovarianceError("cross block has incompatible shape")
        for name, m in (("c_u", cu), ("c_v", cv)):
            scale = max(1.0, float(np.abs(m).max()))
            if np.abs(m - m.T).max() > 1e-8 * scale:
                raise InvalidCovarianceError(f"{name} is not symmetric")
        object.__setattr__(self, "c_u", (cu + cu.T) / 2.0)
        object.__setattr__(self, "c_v", (cv + cv.T) / 2.0)
        object.__setattr__(self, "c_uv", cuv)

    @property
    def d_u(self) -> int:
        return self.c_u.shape[0]

    @property
    def d_v(self) -> int:
        return self.c_v.shape[0]

    def joint(self) -> np.ndarray:
        top = np.hstack([self.c_u, self.c_uv])
        bot = np.hstack([self.c_uv.T, self.c_v])
        return np.vstack([top, bot])

    @classmethod
    def from_blocks(cls, u, v) -> "CovarianceBlocks":
        """Estimate the blocks from aligned sample blocks (rows are draws)."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        if v.ndim == 1:
            v = v[:, None]
        if u.shape[0] != v.shape[0]:
            raise InvalidCovarianceError("U and V must have the same number of rows")
        c = covariance(np.hstack([u, v]))
        du = u.shape[1]
        return cls(c[:du, :du], c[du:, du:], c[:du, du:])


def gaussian_mi_bound(blocks: CovarianceBlocks, *, details: bool = False):
    """Gaussian lower bound on mutual information from covariance blocks.

    Computes ``0.5 * ln(|C_U| |C_V| / |C_[U,V]|)`` in nats, which is the
    mutual information of a jointly Gaussian pair with the same covariance.
    A relative ridge stabilizes the determinants of near-singular empirical
    blocks; Hadamard-Fischer guarantees the value is nonnegative for any
    PSD joint matrix.

    With ``details=True`` also returns a dict with a ``saturated`` flag
    (joint covariance numerically singular, i.e. correlation at 1).
    """
    joint = blocks.joint()
    d = joint.shape[0]
    scale = max(float(np.trace(joint)) / d, 1e-300)
    eig_joint = np.linalg.eigvalsh(joint)
    if eig_joint[0] < -1e-8 * max(scale, 1.0):
        raise InvalidCovarianceError(
            f"joint covariance is not PSD (min eigenvalue {eig_joint[0]:.3e})"
        )

    du, dv = blocks.d_u, blocks.d_v
    ridge_u = COV_RIDGE * max(np.trace(blocks.c_u) / du, 1e-300)
    ridge_v = COV_RIDGE * max(np.trace(blocks.c_v) / dv, 1e-300)
    cu = blocks.c_u + ridge_u * np.eye(du)
    cv = blocks.c_v + ridge_v * np.eye(dv)
    jnt = joint.copy()
    jnt[:du, :du] = cu
    jnt[du:, du:] = cv

    for name, m in (("C_U", cu), ("C_V", cv)):
        if np.linalg.eigvalsh(m)[0] <= 1e-12:
            raise InvalidCovarianceError(f"{name} is singular even after ridge")

    sign_u, ld_u = np.linalg.slogdet(cu)
    sign_v, ld_v = np.linalg.slogdet(cv)
    sign_j, ld_j = np.linalg.slogdet(jnt)
    if min(sign_u, sign_v, sign_j) <= 0:
        raise InvalidCovarianceError("covariance determinant is not positive")
    value = max(0.0, 0.5 * (ld_u + ld_v - ld_j))

    if not details:
        return value
    eig_after = np.linalg.eigvalsh(jnt)[0]
    info = {
        "saturated": bool(eig_after <= 1e-8 * max(scale, 1.0) * 10.0),
        "ridge_u": ridge_u,
        "ridge_v": ridge_v,
        "min_joint_eigenvalue": float(eig_joint[0]),
    }
    return value, info


def mi_from_correlations(rho) -> float:
    """Nats of Gaussian MI implied by canonical correlations: -0.5 sum ln(1 - rho_i^2)."""
    r = np.atleast_1d(np.asarray(rho, dtype=float))
    r = np.clip(np.abs(r), 0.0, SATURATION_RHO)
    return float(-0.5 * np.log1p(-r * r).sum())


def correlations_saturated(rho) -> bool:
    """True when any correlation had to be clamped in mi_from_correlations."""
    r = np.atleast_1d(np.asarray(rho, dtype=float))
    return bool(np.any(np.abs(r) >= SATURATION_RHO))


def w2_to_normal(x) -> float:
    """Squared 2-Wasserstein distance of a sample to the standard normal.

    Quantile form: the sorted sample is compared against the normal scores
    at the mid-rank plotting positions, so a sample sitting exactly on those
    positions scores 0.  Diagnostic only.
    """
    xs = np.sort(np.asarray(x, dtype=float).ravel())
    n = xs.size
    if n < 2:
        raise InsufficientDataError("w2_to_normal needs at least 2 samples")
    grid = rank_quantile_grid(n)
    return float(np.mean((xs - grid) ** 2))


def ks_normal_stat(x) -> float:
    """One-sample Kolmogorov-Smirnov statistic against the standard normal."""
    xs = np.sort(np.asarray(x, dtype=float).ravel())
    n = xs.size
    if n < 1:
        raise InsufficientDataError("ks_normal_stat needs at least 1 sample")
    cdf = ndtr(xs)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf)
    d_minus = np.max(cdf - (i - 1) / n)
    return float(max(d_plus, d_minus))


@dataclass(frozen=True)
class PairedSamples:
    """Aligned observation blocks of X (n x d_x) and Y (n x d_y)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if y.ndim == 1:
            y = y[:, None]
        if x.ndim != 2 or y.ndim != 2:
            raise DomainError("PairedSamples blocks must be 1-D or 2-D arrays")
        if x.shape[0] != y.shape[0]:
            raise DomainError("PairedSamples blocks must share the sample axis")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d_x(self) -> int:
        return self.x.shape[1]

    @property
    def d_y(self) -> int:
        return self.y.shape[1]
