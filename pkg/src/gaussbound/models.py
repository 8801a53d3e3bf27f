"""Synthetic generative models with analytic or numerically exact MI.

Every sampler is pure given its seed.  The scrambled models apply invertible
but non-monotonic per-coordinate mirrors (plus rotations where noted), which
preserve the analytic mutual information while destroying the raw Gaussian
bound, making them the standard stress tests for the pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr, ndtri
from scipy.stats import gamma as gamma_dist

from .errors import DomainError, ParameterError
from .stats_core import NATS_PER_BIT, PairedSamples

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ModelSpec:
    """Declarative model choice used by the CLI."""

    family: str
    params: dict = field(default_factory=dict)
    d: int = 1
    seed: int | None = None

    _FAMILIES = ("gm1d", "mv_gaussian_scramble", "exp_gamma", "gm_mv")

    def __post_init__(self):
        if self.family not in self._FAMILIES:
            raise ParameterError(
                f"unknown model family {self.family!r}; choose from {self._FAMILIES}"
            )
        if self.d < 1:
            raise ParameterError("dimension must be at least 1")


@dataclass
class ModelSample:
    """Drawn paired samples plus the model's exact mutual information."""

    samples: PairedSamples
    true_mi_nats: float | None
    meta: dict = field(default_factory=dict)

    @property
    def true_mi_bits(self) -> float | None:
        if self.true_mi_nats is None:
            return None
        return self.true_mi_nats / NATS_PER_BIT


def mirror_transform(t, lo: float, hi: float):
    """Reflect values inside [lo, hi] about the interval midpoint.

    Involutive, non-monotonic, measure preserving on the reflected interval;
    values outside the interval pass through unchanged.
    """
    if not lo < hi:
        raise ParameterError("mirror_transform needs lo < hi")
    arr = np.asarray(t, dtype=float)
    out = np.where((arr >= lo) & (arr <= hi), lo + hi - arr, arr)
    return float(out) if np.ndim(t) == 0 else out


def _gm1d_draw(rng: np.random.Generator, n: int, mu_z: float, eps: float):
    x = rng.standard_normal(n)
    w = eps * rng.standard_normal(n)
    z = mu_z + rng.standard_normal(n)
    noise_branch = rng.random(n) < 0.5
    y = np.where(noise_branch, z, x + w)
    return x, y, noise_branch


def gm_mv_sample(n: int, d: int, mu_z: float = 10.0, eps: float = 0.1, seed=None) -> ModelSample:
    """Independent per-coordinate replicas of the Gaussian-mixture pair."""
    if n < 1 or d < 1:
        raise ParameterError("n and d must be at least 1")
    children = np.random.SeedSequence(seed).spawn(d)
    x = np.empty((n, d))
    y = np.empty((n, d))
    branches = np.empty((n, d), dtype=bool)
    for j, child in enumerate(children):
        x[:, j], y[:, j], branches[:, j] = _gm1d_draw(
            np.random.default_rng(child), n, mu_z, eps
        )
    return ModelSample(
        samples=PairedSamples(x, y),
        true_mi_nats=d * gm1d_true_mi(mu_z, eps),
        meta={"noise_branch": branches, "mu_z": mu_z, "eps": eps},
    )


def gm1d_sample(n: int, mu_z: float = 10.0, eps: float = 0.1, seed=None) -> ModelSample:
    """Gaussian-mixture pair: X ~ N(0,1); Y = X + W or an independent N(mu_z, 1).

    The fair branch indicator is kept in ``meta['noise_branch']`` (True where
    Y came from the independent component).
    """
    return gm_mv_sample(n, 1, mu_z, eps, seed)


def _entropy_quad(pdf, splits) -> float:
    """Differential entropy -int p ln p via adaptive quadrature over segments."""

    def integrand(t):
        p = pdf(t)
        return -p * math.log(p) if p > 0 else 0.0

    pts = [-np.inf, *splits, np.inf]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += quad(integrand, a, b, limit=200)[0]
    return total


def _norm_pdf(t, mean, std):
    z = (t - mean) / std
    return math.exp(-0.5 * z * z) / (std * math.sqrt(2 * math.pi))


def _gm1d_mi_numeric(mu_z: float, eps: float, p_noise: float = 0.5) -> float:
    """I(X;Y) = h(Y) - h(Y|X) by nested quadrature, accurate to ~1e-4 nats."""
    sig0 = math.sqrt(1.0 + eps * eps)

    def pdf_y(t):
        out = (1.0 - p_noise) * _norm_pdf(t, 0.0, sig0)
        if p_noise > 0:
            out += p_noise * _norm_pdf(t, mu_z, 1.0)
        return out

    h_y = _entropy_quad(pdf_y, sorted({0.0, mu_z / 2.0, mu_z}))

    if p_noise == 0.0:
        h_y_given_x = 0.5 * (_LOG_2PI + 1.0) + math.log(eps)
    else:
        nodes, weights = np.polynomial.hermite.hermgauss(64)
        xs = math.sqrt(2.0) * nodes
        ws = weights / math.sqrt(math.pi)
        h_y_given_x = 0.0
        for xval, wval in zip(xs, ws):

            def pdf_cond(t, xv=xval):
                return (1.0 - p_noise) * _norm_pdf(t, xv, eps) + p_noise * _norm_pdf(
                    t, mu_z, 1.0
                )

            h_y_given_x += wval * _entropy_quad(
                pdf_cond, sorted({xval, (xval + mu_z) / 2.0, mu_z})
            )
    return h_y - h_y_given_x


def gm1d_mi_closed_form(mu_z: float, eps: float) -> float:
    """Non-overlap approximation: 0.25 ln(1 + eps^2) - 0.5 ln eps, in nats."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    return 0.25 * math.log1p(eps * eps) - 0.5 * math.log(eps)


def gm1d_true_mi(mu_z: float, eps: float, *, details: bool = False):
    """Exact (numeric) MI of the Gaussian-mixture pair, in nats.

    The numeric path integrates the exact mixture densities; the closed-form
    non-overlap approximation is returned alongside it when ``details=True``
    (it is only trustworthy once the two components barely overlap).
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    numeric = _gm1d_mi_numeric(mu_z, eps)
    if not details:
        return numeric
    closed = gm1d_mi_closed_form(mu_z, eps)
    return numeric, {
        "closed_form_nats": closed,
        "closed_form_valid": abs(mu_z) >= 6.0 * (1.0 + eps),
        "gap_nats": numeric - closed,
    }


def _haar_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def mvg_scramble_sample(n: int, d: int, seed=None) -> ModelSample:
    """Jointly Gaussian Y = X + W, then per-coordinate mirror on [-1, 1].

    The mirror is invertible so I(X;Y) = (d/2) ln 2 nats exactly; it is also
    measure preserving for the symmetric interval, so each scrambled X
    coordinate is still standard normal marginally.
    """
    if not 1 <= d <= 10:
        raise ParameterError("d must be in [1, 10]")
    rng = np.random.default_rng(seed)
    x_raw = rng.standard_normal((n, d))
    y_raw = x_raw + rng.standard_normal((n, d))
    x = mirror_transform(x_raw, -1.0, 1.0)
    y = mirror_transform(y_raw, -1.0, 1.0)
    return ModelSample(
        samples=PairedSamples(x, y),
        true_mi_nats=0.5 * d * math.log(2.0),
        meta={"x_raw": x_raw, "y_raw": y_raw, "mirror": (-1.0, 1.0)},
    )


def expgamma_sample(n: int, d: int, seed=None) -> ModelSample:
    """Exponential X, Gamma Y = X + W, mirrored on [0, 2] and rotated.

    Each coordinate of X and W is Exp(1); after the per-coordinate mirror
    about 1, a fixed seeded rotation mixes the X block and another the Y
    block (identity when d = 1).  All steps are invertible, so
    I(X;Y) = d * gamma (Euler-Mascheroni) nats exactly.
    """
    if not 1 <= d <= 10:
        raise ParameterError("d must be in [1, 10]")
    rng = np.random.default_rng(seed)
    x_raw = rng.exponential(1.0, (n, d))
    y_raw = x_raw + rng.exponential(1.0, (n, d))
    x = mirror_transform(x_raw, 0.0, 2.0)
    y = mirror_transform(y_raw, 0.0, 2.0)
    rot_x = _haar_rotation(d, rng) if d > 1 else np.eye(1)
    rot_y = _haar_rotation(d, rng) if d > 1 else np.eye(1)
    return ModelSample(
        samples=PairedSamples(x @ rot_x.T, y @ rot_y.T),
        true_mi_nats=d * np.euler_gamma,
        meta={
            "x_raw": x_raw,
            "y_raw": y_raw,
            "mirror": (0.0, 2.0),
            "rotation_x": rot_x,
            "rotation_y": rot_y,
        },
    )


# ---------------------------------------------------------------------------
# Discretizable analytic joints (for the quadrature path of the discrete IB)
# ---------------------------------------------------------------------------


def _bvn_cdf(x, y, rho: float, sx: float = 1.0, sy: float = 1.0):
    """CDF of a centered bivariate normal with given scales and correlation."""
    from scipy.stats import multivariate_normal

    cov = np.array([[sx * sx, rho * sx * sy], [rho * sx * sy, sy * sy]])
    xb, yb = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    pts = np.stack([xb.ravel(), yb.ravel()], axis=-1)
    vals = multivariate_normal(mean=[0.0, 0.0], cov=cov).cdf(pts)
    return np.asarray(vals).reshape(xb.shape)


class BivariateGaussianModel:
    """Standard bivariate normal with correlation rho."""

    def __init__(self, rho: float):
        if not -1.0 < rho < 1.0:
            raise DomainError("rho must lie strictly inside (-1, 1)")
        self.rho = float(rho)

    def x_gaussian_components(self):
        return [(1.0, 0.0, 1.0)]

    def y_gaussian_components(self):
        return [(1.0, 0.0, 1.0)]

    def joint_log_density(self, x, y):
        r = self.rho
        det = 1.0 - r * r
        q = (x * x - 2.0 * r * x * y + y * y) / det
        return -0.5 * q - math.log(2.0 * math.pi * math.sqrt(det))

    def joint_cdf(self, x, y):
        return _bvn_cdf(x, y, self.rho)

    def mi_nats(self) -> float:
        return -0.5 * math.log1p(-self.rho * self.rho)


class Gm1dModel:
    """Analytic joint of the univariate Gaussian-mixture pair."""

    def __init__(self, mu_z: float = 10.0, eps: float = 0.1):
        if eps <= 0:
            raise DomainError("eps must be positive")
        self.mu_z = float(mu_z)
        self.eps = float(eps)

    def x_gaussian_components(self):
        return [(1.0, 0.0, 1.0)]

    def y_gaussian_components(self):
        return [(0.5, 0.0, math.sqrt(1.0 + self.eps ** 2)), (0.5, self.mu_z, 1.0)]

    def joint_log_density(self, x, y):
        log_px = -0.5 * x * x - 0.5 * _LOG_2PI
        zc = (y - x) / self.eps
        log_corr = -0.5 * zc * zc - 0.5 * _LOG_2PI - math.log(self.eps)
        zn = y - self.mu_z
        log_noise = -0.5 * zn * zn - 0.5 * _LOG_2PI
        return log_px + np.logaddexp(log_corr, log_noise) + math.log(0.5)

    def joint_cdf(self, x, y):
        # correlated branch: (X, X+W) is bivariate normal
        sy = math.sqrt(1.0 + self.eps ** 2)
        corr = _bvn_cdf(x, y, 1.0 / sy, 1.0, sy)
        noise = ndtr(np.asarray(x, float)) * ndtr(np.asarray(y, float) - self.mu_z)
        return 0.5 * corr + 0.5 * noise

    def mi_nats(self) -> float:
        return gm1d_true_mi(self.mu_z, self.eps)


class ExpMirrorModel:
    """Univariate exponential pair after the [0, 2] mirror (no rotation).

    X ~ Exp(1) and Y = X + W with W ~ Exp(1); both are reflected about 1 on
    [0, 2].  The mirror is piecewise unit-Jacobian, so the joint density of
    the mirrored pair is the raw density evaluated at the mirrored points.
    Marginals are not Gaussian mixtures, so discretization falls back to
    quantile binning.
    """

    def __init__(self):
        self._f2 = 1.0 - math.exp(-2.0)  # Exp(1) CDF at 2
        self._g2 = float(gamma_dist.cdf(2.0, 2.0))

    def x_gaussian_components(self):
        return None

    def y_gaussian_components(self):
        return None

    def x_quantile(self, q):
        q = np.asarray(q, dtype=float)
        low = q <= self._f2
        out = np.where(
            low,
            2.0 + np.log(np.maximum(q + math.exp(-2.0), 1e-300)),
            -np.log1p(-np.minimum(q, 1.0 - 1e-15)),
        )
        return out

    def y_quantile(self, q):
        q = np.asarray(q, dtype=float)
        out = np.empty_like(q)
        low = q <= self._g2
        out[low] = 2.0 - gamma_dist.ppf(self._g2 - q[low], 2.0)
        out[~low] = gamma_dist.ppf(np.minimum(q[~low], 1.0 - 1e-15), 2.0)
        return out

    def joint_log_density(self, x, y):
        xm = mirror_transform(np.asarray(x, dtype=float), 0.0, 2.0)
        ym = mirror_transform(np.asarray(y, dtype=float), 0.0, 2.0)
        valid = (xm >= 0.0) & (ym >= xm)
        with np.errstate(invalid="ignore"):
            out = np.where(valid, -ym, -np.inf)
        return np.broadcast_to(out, np.broadcast(xm, ym).shape).copy()

    @staticmethod
    def _raw_cdf(x, y):
        """P(X <= x, X + W <= y) for the unmirrored exponential pair."""
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        m = np.minimum(x, y)
        return 1.0 - np.exp(-m) - m * np.exp(-y)

    @classmethod
    def _mirror_interval(cls, a):
        """Preimage of (-inf, a] under the [0, 2] mirror, as [lo, hi]."""
        a = np.asarray(a, dtype=float)
        lo = np.where(a < 2.0, 2.0 - a, 0.0)
        hi = np.where(a < 2.0, 2.0, a)
        empty = a < 0.0
        lo = np.where(empty, 0.0, lo)
        hi = np.where(empty, 0.0, hi)
        return lo, hi

    def joint_cdf(self, x, y):
        ax_lo, ax_hi = self._mirror_interval(x)
        ay_lo, ay_hi = self._mirror_interval(y)
        f = self._raw_cdf
        return (
            f(ax_hi, ay_hi) - f(ax_lo, ay_hi) - f(ax_hi, ay_lo) + f(ax_lo, ay_lo)
        )

    def mi_nats(self) -> float:
        return float(np.euler_gamma)

    def sample(self, n: int, seed=None) -> ModelSample:
        full = expgamma_sample(n, 1, seed)
        return full


def sample_from_spec(spec: ModelSpec, n: int) -> ModelSample:
    """Draw from a declarative model spec."""
    p = spec.params
    if spec.family == "gm1d":
        return gm1d_sample(n, p.get("mu_z", 10.0), p.get("eps", 0.1), spec.seed)
    if spec.family == "gm_mv":
        return gm_mv_sample(n, spec.d, p.get("mu_z", 10.0), p.get("eps", 0.1), spec.seed)
    if spec.family == "mv_gaussian_scramble":
        return mvg_scramble_sample(n, spec.d, spec.seed)
    if spec.family == "exp_gamma":
        return expgamma_sample(n, spec.d, spec.seed)
    raise ParameterError(f"unknown family {spec.family!r}")


def discretizable_from_spec(spec: ModelSpec):
    """Analytic joint for the quadrature path, or None when d > 1."""
    if spec.d != 1:
        return None
    p = spec.params
    if spec.family in ("gm1d", "gm_mv"):
        return Gm1dModel(p.get("mu_z", 10.0), p.get("eps", 0.1))
    if spec.family == "exp_gamma":
        return ExpMirrorModel()
    return None


# ---------------------------------------------------------------------------
# Oracle joints exposing analytic conditional structure
# ---------------------------------------------------------------------------


def _power_iterate_pair(c_x, c_y, c_xy, tol=1e-13, max_iter=500):
    """Alternating conditional expectations in the Gaussian domain.

    For jointly Gaussian blocks the conditional-expectation projection of a
    linear functional is again linear, so the alternation reduces to a power
    iteration on the whitened cross-covariance.  Returns the fixed-point
    directions (normalized to unit output variance), the correlation, and
    the per-step correlation trace.
    """
    d_y = c_y.shape[0]
    b = np.ones(d_y)
    denom = float(b @ c_y @ b)
    if denom <= 0:
        return None
    b = b / math.sqrt(denom)
    rho_prev = -np.inf
    trace = []
    a = None
    for _ in range(max_iter):
        # E[b^T Y | X] = (C_xy b)^T C_x^{-1} X; normalize its variance
        a_raw = np.linalg.solve(c_x, c_xy @ b)
        var_a = float(a_raw @ c_x @ a_raw)
        if var_a <= 1e-24:
            return None
        a = a_raw / math.sqrt(var_a)
        b_raw = np.linalg.solve(c_y, c_xy.T @ a)
        var_b = float(b_raw @ c_y @ b_raw)
        if var_b <= 1e-24:
            return None
        b = b_raw / math.sqrt(var_b)
        rho = float(a @ c_xy @ b)
        trace.append(rho)
        if abs(rho - rho_prev) < tol:
            break
        rho_prev = rho
    return a, b, float(trace[-1]), np.asarray(trace)


class OracleGaussian:
    """Jointly Gaussian model exposing analytic conditional structure.

    Pair fitting runs the alternating-projection fixed point in closed form
    (conditional expectations of linear functionals).  The push-forward to
    the subspace independent of the first canonical variable is exact: the
    regression residual, rotated to its principal axes and mapped to uniform
    per coordinate (the residual given a scalar projection has one
    degenerate direction, so the subspace has d - 1 coordinates).
    """

    def __init__(self, c_x, c_y, c_xy):
        self.c_x = np.atleast_2d(np.asarray(c_x, dtype=float))
        self.c_y = np.atleast_2d(np.asarray(c_y, dtype=float))
        self.c_xy = np.atleast_2d(np.asarray(c_xy, dtype=float))
        self.d_x = self.c_x.shape[0]
        self.d_y = self.c_y.shape[0]
        joint = np.block([[self.c_x, self.c_xy], [self.c_xy.T, self.c_y]])
        if np.linalg.eigvalsh(joint)[0] <= 0:
            raise DomainError("joint covariance must be positive definite")
        self._chol = np.linalg.cholesky(joint)
        self._wx, self._wy, self._rho = self._canonical_directions()
        self._res_x = self._residual_basis(self.c_x, self._wx[:, 0])
        self._res_y = self._residual_basis(self.c_y, self._wy[:, 0])

    def _canonical_directions(self):
        def isqrt(m):
            lam, e = np.linalg.eigh(m)
            return e @ np.diag(1.0 / np.sqrt(lam)) @ e.T

        isx, isy = isqrt(self.c_x), isqrt(self.c_y)
        left, sing, right_t = np.linalg.svd(isx @ self.c_xy @ isy)
        wx = isx @ left  # columns: canonical directions, wx_i^T C_X wx_i = 1
        wy = isy @ right_t.T
        return wx, wy, np.clip(sing, 0.0, 1.0)

    @staticmethod
    def _residual_basis(cov, w):
        beta = cov @ w  # Cov(block, unit-variance canonical variable)
        cov_resid = cov - np.outer(beta, beta)
        lam, vecs = np.linalg.eigh((cov_resid + cov_resid.T) / 2.0)
        keep = lam > 1e-10 * max(lam.max(), 1e-300)
        return beta, vecs[:, keep], np.sqrt(lam[keep])

    @property
    def canonical_correlations(self) -> np.ndarray:
        return self._rho.copy()

    def mi_nats(self) -> float:
        return float(-0.5 * np.log1p(-self._rho ** 2).sum())

    def sample(self, n: int, seed=None):
        rng = np.random.default_rng(seed)
        z = rng.standard_normal((n, self.d_x + self.d_y)) @ self._chol.T
        return z[:, : self.d_x], z[:, self.d_x :]

    def first_pair_values(self, x_block, y_block):
        """Fixed point of the oracle alternation, evaluated on the samples."""
        fit = _power_iterate_pair(self.c_x, self.c_y, self.c_xy)
        if fit is None or fit[2] <= 1e-12:
            return None
        a, b, rho, trace = fit
        return np.asarray(x_block) @ a, np.asarray(y_block) @ b, rho, trace

    def independent_subspace_x(self, x_block) -> np.ndarray:
        x = np.asarray(x_block, dtype=float)
        beta, vecs, scales = self._res_x
        resid = x - np.outer(x @ self._wx[:, 0], beta)
        return ndtr(resid @ vecs / scales)

    def independent_subspace_y(self, y_block) -> np.ndarray:
        y = np.asarray(y_block, dtype=float)
        beta, vecs, scales = self._res_y
        resid = y - np.outer(y @ self._wy[:, 0], beta)
        return ndtr(resid @ vecs / scales)

    def _residual_cross_cov(self):
        wx, wy = self._wx[:, 0], self._wy[:, 0]
        bx, ex, sx = self._res_x
        by, ey, sy = self._res_y
        rho1 = float(wx @ self.c_xy @ wy)
        cross = (
            self.c_xy
            - np.outer(bx, wx @ self.c_xy)
            - np.outer(self.c_xy @ wy, by)
            + rho1 * np.outer(bx, by)
        )
        # covariance of the standardized principal residual scores
        return (ex / sx[None, :]).T @ cross @ (ey / sy[None, :])

    def second_pair_values(self, x_tilde, y_tilde):
        """Oracle alternation on the push-forward blocks (uniform coordinates)."""
        zx = ndtri(np.clip(np.asarray(x_tilde, float), 1e-15, 1 - 1e-15))
        zy = ndtri(np.clip(np.asarray(y_tilde, float), 1e-15, 1 - 1e-15))
        dx, dy = zx.shape[1], zy.shape[1]
        fit = _power_iterate_pair(np.eye(dx), np.eye(dy), self._residual_cross_cov())
        if fit is None or fit[2] <= 1e-12:
            return None
        a, b, rho, trace = fit
        return zx @ a, zy @ b, rho, trace

    @classmethod
    def from_canonical(cls, rhos, d: int | None = None, seed: int = 0) -> "OracleGaussian":
        """Identity marginals with prescribed canonical correlations."""
        rhos = np.asarray(rhos, dtype=float)
        d = d or rhos.size
        rng = np.random.default_rng(seed)
        q1, q2 = _haar_rotation(d, rng), _haar_rotation(d, rng)
        diag = np.zeros((d, d))
        diag[: rhos.size, : rhos.size] = np.diag(rhos)
        return cls(np.eye(d), np.eye(d), q1 @ diag @ q2.T)


class OracleProduct:
    """Independent standard-normal blocks (zero canonical correlation)."""

    def __init__(self, d_x: int = 2, d_y: int = 2):
        self.d_x = d_x
        self.d_y = d_y

    def sample(self, n: int, seed=None):
        rng = np.random.default_rng(seed)
        return rng.standard_normal((n, self.d_x)), rng.standard_normal((n, self.d_y))

    def first_pair_values(self, x_block, y_block):
        return None  # conditional expectations are constant

    def second_pair_values(self, x_tilde, y_tilde):
        return None

    def independent_subspace_x(self, x_block) -> np.ndarray:
        return ndtr(np.asarray(x_block, dtype=float))

    def independent_subspace_y(self, y_block) -> np.ndarray:
        return ndtr(np.asarray(y_block, dtype=float))
