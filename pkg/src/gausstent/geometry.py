"""Admissible balls, boxes and Gaussian measure.

The standard Gaussian measure ``dgamma = (2*pi)**(-n/2) * exp(-|x|^2/2) dx``
is not doubling on all of R^n, but it is doubling on *admissible* balls:
balls B(x, r) whose radius is controlled by the admissibility function

    m(x) = min(1, 1/|x|)        (|x| the Euclidean norm).

A ball is admissible at scale ``alpha`` when ``r <= alpha * m(center)``.
This module provides the admissibility predicate, exact Gaussian measures of
boxes, Gaussian measures of balls in dimensions 1-3, and an empirical
doubling-ratio sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import i0e, ndtr

__all__ = [
    "AdmissibleBall",
    "Box",
    "MeasureEstimate",
    "ToleranceError",
    "admissibility_radius",
    "m_from_norms",
    "is_admissible",
    "interval_gamma_1d",
    "gaussian_measure_box",
    "gaussian_measure_ball",
    "ball_measures_1d",
    "box_measure_value",
    "doubling_ratio_sample",
    "sample_truncated_gaussian",
]


class ToleranceError(RuntimeError):
    """A quadrature budget was exhausted before reaching the tolerance."""


def admissibility_radius(x):
    """Admissibility function m(x) = min(1, 1/|x|).

    Parameters
    ----------
    x : array_like
        A point of shape (n,) or a batch of points of shape (..., n).
        A bare 1-d array is read as a single n-dim point; n=1 batches
        must be shaped (N, 1).

    Returns
    -------
    float or ndarray
        m evaluated per point.  m(0) = 1.
    """
    x = np.asarray(x, dtype=float)
    norms = np.linalg.norm(np.atleast_1d(x), axis=-1)
    m = 1.0 / np.maximum(norms, 1.0)
    if m.ndim == 0:
        return float(m)
    return m


def m_from_norms(norms):
    """m as a function of the Euclidean norm, vectorized."""
    return 1.0 / np.maximum(np.asarray(norms, dtype=float), 1.0)


@dataclass(frozen=True)
class AdmissibleBall:
    """Open Euclidean ball B(center, radius), radius > 0."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def n(self) -> int:
        return self.center.shape[0]

    @property
    def scale(self) -> float:
        """Smallest alpha with B in the alpha-admissible family."""
        return self.radius / admissibility_radius(self.center)

    def contains(self, x) -> bool:
        return bool(np.linalg.norm(np.asarray(x, dtype=float) - self.center) < self.radius)


def is_admissible(ball: AdmissibleBall, alpha: float) -> bool:
    """True iff radius <= alpha * m(center) (boundary radius allowed)."""
    return ball.radius <= alpha * admissibility_radius(ball.center)


@dataclass(frozen=True)
class Box:
    """Half-open axis-aligned box [lower_1, upper_1) x ... x [lower_n, upper_n)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("box needs lower < upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def side(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x < self.upper))

    def distance(self, x) -> float:
        """Euclidean distance from x to the closed box."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        d = np.maximum(self.lower - x, 0.0) + np.maximum(x - self.upper, 0.0)
        return float(np.linalg.norm(d))

    def interior_margin(self, x) -> float:
        """Distance from x to the complement of the box (<= 0 outside)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(np.min(np.minimum(x - self.lower, self.upper - x)))

    def dilate(self, factor: float) -> "Box":
        c, half = self.center, 0.5 * self.side
        return Box(c - factor * half, c + factor * half)

    def intersects(self, other: "Box") -> bool:
        return bool(np.all(self.lower < other.upper) and np.all(other.lower < self.upper))


@dataclass(frozen=True)
class MeasureEstimate:
    """A measure value with an absolute error bound and the method used."""

    value: float
    abs_error: float
    method: str  # "exact-product" | "quadrature" | "monte-carlo"


def interval_gamma_1d(a, b) -> np.ndarray:
    """Phi(b) - Phi(a), evaluated on the tail side when both endpoints are
    positive so that far intervals keep full relative precision (the naive
    difference of two ndtr values near 1 cancels catastrophically)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    tail = ndtr(-a) - ndtr(-b)
    direct = ndtr(b) - ndtr(a)
    return np.maximum(np.where(a >= 0.0, tail, direct), 0.0)


def gaussian_measure_box(box: Box) -> MeasureEstimate:
    """Exact product-form Gaussian measure of a box."""
    value = float(np.prod(interval_gamma_1d(box.lower, box.upper)))
    # ndtr is erf-based; per-factor relative error ~1e-16, n factors.
    err = max(1e-15 * value, 1e-16) * box.n
    return MeasureEstimate(value, min(err, 1e-12), "exact-product")


def box_measure_value(lower, upper) -> np.ndarray:
    """Vectorized raw box measures, prod over the last axis."""
    return np.prod(interval_gamma_1d(lower, upper), axis=-1)


def _ball_measure_1d(c: float, r: float) -> float:
    return float(interval_gamma_1d(c - r, c + r))


def _ball_measure_2d(ball: AdmissibleBall, tol: float) -> MeasureEstimate:
    # Polar quadrature about the center; the angular integral is
    # 2*pi*I0(s*rho), so only the radial integral
    #   int_0^r s * exp(-(s-rho)^2/2) * i0e(s*rho) ds
    # is done numerically (Gauss-Legendre, node doubling until converged).
    rho = float(np.linalg.norm(ball.center))
    r = ball.radius

    def radial(nodes: int) -> float:
        u, w = np.polynomial.legendre.leggauss(nodes)
        s = 0.5 * r * (u + 1.0)
        f = s * np.exp(-0.5 * (s - rho) ** 2) * i0e(s * rho)
        return float(0.5 * r * np.dot(w, f))

    prev = radial(16)
    for nodes in (32, 64, 128, 256, 512):
        cur = radial(nodes)
        err = abs(cur - prev)
        if err <= 0.5 * tol:
            return MeasureEstimate(cur, err + 1e-15, "quadrature")
        prev = cur
    raise ToleranceError(f"ball quadrature did not reach tol={tol}")


def _ball_measure_qmc(ball: AdmissibleBall, tol: float, rng_seed: int = 0) -> MeasureEstimate:
    # Scrambled-Sobol estimate of mean density over the ball, uniform-in-ball
    # mapping (radius ~ u^(1/n)); empirical error from replicate spread.
    from scipy.stats import qmc

    n = ball.n
    c, r = ball.center, ball.radius
    vol = math.pi ** (n / 2) / math.gamma(n / 2 + 1) * r**n
    norm = (2 * math.pi) ** (-n / 2)

    def replicate(seed: int, m: int) -> float:
        u = qmc.Sobol(d=n, scramble=True, seed=seed).random(m)
        s = r * u[:, 0] ** (1.0 / n)
        if n == 3:
            z = 2.0 * u[:, 1] - 1.0
            phi = 2.0 * math.pi * u[:, 2]
            d = np.column_stack([np.sqrt(1 - z**2) * np.cos(phi), np.sqrt(1 - z**2) * np.sin(phi), z])
        else:
            g = np.column_stack([np.cos(2 * math.pi * u[:, 1]), np.sin(2 * math.pi * u[:, 1])])
            d = g if n == 2 else u[:, 1:] * 0  # n==2 fallback; n>3 unsupported
        pts = c + s[:, None] * d
        return float(np.mean(norm * np.exp(-0.5 * np.sum(pts**2, axis=1))))

    if n > 3:
        raise ToleranceError("ball measure beyond n=3 is out of design scale")
    m = 1 << 12
    for _ in range(4):
        reps = np.array([replicate(rng_seed + 7 * j + 1, m) for j in range(8)])
        value = vol * float(np.mean(reps))
        err = vol * 3.0 * float(np.std(reps)) / math.sqrt(len(reps)) + 1e-15
        if err <= tol:
            return MeasureEstimate(value, err, "monte-carlo")
        m *= 4
    raise ToleranceError(f"QMC ball measure did not reach tol={tol}")


def gaussian_measure_ball(ball: AdmissibleBall, tol: float = 1e-9) -> MeasureEstimate:
    """Gaussian measure of a Euclidean ball.

    n=1 is exact (difference of normal CDFs), n=2 uses polar quadrature with
    the angular integral in closed form, n=3 uses scrambled QMC with an
    empirical error estimate.  Raises ToleranceError if the requested
    tolerance cannot be met within the node/sample budget.
    """
    if ball.n == 1:
        v = _ball_measure_1d(float(ball.center[0]), ball.radius)
        return MeasureEstimate(v, 1e-15 * max(v, 1e-3), "exact-product")
    if ball.n == 2:
        return _ball_measure_2d(ball, tol)
    return _ball_measure_qmc(ball, tol)


def ball_measure_value(ball: AdmissibleBall, tol: float = 1e-9) -> float:
    return gaussian_measure_ball(ball, tol).value


def ball_measures_1d(centers, radii) -> np.ndarray:
    """Vectorized exact n=1 ball measures, stable far from the origin."""
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    return interval_gamma_1d(centers - radii, centers + radii)


def sample_truncated_gaussian(rng: np.random.Generator, n: int, size: int, window_radius: float = 8.0) -> np.ndarray:
    """Draw points from gamma restricted to [-R, R]^n (rejection)."""
    out = np.empty((size, n))
    filled = 0
    while filled < size:
        cand = rng.standard_normal((2 * (size - filled) + 16, n))
        keep = cand[np.all(np.abs(cand) <= window_radius, axis=1)]
        take = min(len(keep), size - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
    return out


def doubling_ratio_sample(
    alpha: float,
    tau: float,
    trials: int,
    rng_seed: int,
    n: int = 1,
    window_radius: float = 8.0,
    tol: float = 1e-9,
) -> float:
    """Empirical doubling diagnostic on admissible balls.

    Samples B1 in the alpha-admissible family (centers from gamma restricted
    to the window, radii uniform), then B2 intersecting B1 with
    r2 <= tau * r1, and returns the max observed gamma(B2)/gamma(B1).
    The value is a per-session diagnostic, not a certified constant.
    """
    rng = np.random.default_rng(rng_seed)
    centers = sample_truncated_gaussian(rng, n, trials, window_radius)
    m1 = np.atleast_1d(admissibility_radius(centers))
    r1 = rng.uniform(0.0, 1.0, trials) * alpha * m1
    r1 = np.maximum(r1, 1e-6)
    # B2 center anywhere with |c2 - c1| < r1 + r2 so the open balls intersect.
    r2 = rng.uniform(0.0, 1.0, trials) * tau * r1
    r2 = np.maximum(r2, 1e-7)
    dirs = rng.standard_normal((trials, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dist = rng.uniform(0.0, 1.0, trials) ** (1.0 / n) * (r1 + r2) * (1 - 1e-12)
    c2 = centers + dist[:, None] * dirs
    worst = 0.0
    if n == 1:
        g1 = ball_measures_1d(centers[:, 0], r1)
        g2 = ball_measures_1d(c2[:, 0], r2)
        worst = float(np.max(g2 / g1))
    else:
        for i in range(trials):
            g1 = ball_measure_value(AdmissibleBall(centers[i], float(r1[i])), tol)
            g2 = ball_measure_value(AdmissibleBall(c2[i], float(r2[i])), tol)
            worst = max(worst, g2 / g1)
    return worst
