"""Input distributions for the scalar channel Y = sqrt(snr)*X + N.

Four families are supported:

* ``DiscreteAtoms`` -- finitely many atoms with probabilities,
* ``Gaussian`` -- a single Gaussian component,
* ``GaussianMixture`` -- a finite mixture of Gaussians,
* ``GriddedDensity`` -- a piecewise-linear density tabulated on a grid.

Every law exposes exact (or trapezoid, for gridded laws) raw moments up to
order four and deterministic seeded sampling.  The first three families are
closed under convolution with a Gaussian, which the channel modules exploit:
the output density is an exact Gaussian mixture.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

PROB_ATOL = 1e-12
PDF_ATOL = 1e-8


@dataclass(frozen=True)
class Moments:
    """Raw moments of an input law: mean, central variance, E X^3, E X^4."""
    mean: float
    variance: float
    third: float
    fourth: float


@dataclass(frozen=True)
class DiscreteAtoms:
    """Finitely many atoms ``values`` with probabilities ``probs``."""
    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))
        if self.values.ndim != 1 or self.probs.shape != self.values.shape:
            raise ValueError("values and probs must be 1D arrays of equal length")
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(self.probs.sum() - 1.0) > PROB_ATOL:
            raise ValueError("probabilities must sum to 1 within 1e-12")


@dataclass(frozen=True)
class Gaussian:
    """Gaussian law N(mean, variance)."""
    mean: float
    variance: float

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError("variance must be positive")


@dataclass(frozen=True)
class GaussianMixture:
    """Finite Gaussian mixture; components are (weight, mean, variance)."""
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "means", np.asarray(self.means, dtype=float))
        object.__setattr__(self, "variances", np.asarray(self.variances, dtype=float))
        if not (self.weights.shape == self.means.shape == self.variances.shape):
            raise ValueError("weights, means, variances must have equal shapes")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(self.weights.sum() - 1.0) > PROB_ATOL:
            raise ValueError("weights must sum to 1 within 1e-12")
        if np.any(self.variances <= 0):
            raise ValueError("component variances must be positive")

    @classmethod
    def from_components(cls, components) -> "GaussianMixture":
        w, m, v = (np.array(col, dtype=float) for col in zip(*components))
        return cls(w, m, v)


@dataclass(frozen=True)
class GriddedDensity:
    """Piecewise-linear density ``pdf`` on a strictly increasing ``grid``."""
    grid: np.ndarray
    pdf: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))
        object.__setattr__(self, "pdf", np.asarray(self.pdf, dtype=float))
        if self.grid.ndim != 1 or self.pdf.shape != self.grid.shape:
            raise ValueError("grid and pdf must be 1D arrays of equal length")
        if self.grid.size < 2 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing with >= 2 points")
        if np.any(self.pdf < 0):
            raise ValueError("pdf values must be nonnegative")
        mass = np.trapezoid(self.pdf, self.grid)
        if mass <= 0:
            raise ValueError("gridded density has zero total mass")
        if abs(mass - 1.0) > PDF_ATOL:
            raise ValueError("gridded pdf must integrate to 1 within 1e-8 (trapezoid)")


InputLaw = Union[DiscreteAtoms, Gaussian, GaussianMixture, GriddedDensity]


def binary_law() -> DiscreteAtoms:
    """Equiprobable atoms at -1 and +1."""
    return DiscreteAtoms(np.array([-1.0, 1.0]), np.array([0.5, 0.5]))


def standard_gaussian_law() -> Gaussian:
    return Gaussian(0.0, 1.0)


def _gaussian_raw_moments(mean: float, var: float, order: int) -> list:
    """Raw moments E X^k, k = 0..order, of N(mean, var) via the recursion
    M_k = mean*M_{k-1} + (k-1)*var*M_{k-2}."""
    out = [1.0, float(mean)]
    for k in range(2, order + 1):
        out.append(mean * out[k - 1] + (k - 1) * var * out[k - 2])
    return out[: order + 1]


def moments(law: InputLaw) -> Moments:
    """Mean, variance and raw third/fourth moments of ``law``."""
    if isinstance(law, DiscreteAtoms):
        raw = [float(np.sum(law.probs * law.values ** k)) for k in range(5)]
    elif isinstance(law, Gaussian):
        raw = _gaussian_raw_moments(law.mean, law.variance, 4)
    elif isinstance(law, GaussianMixture):
        raw = [0.0] * 5
        for w, m, v in zip(law.weights, law.means, law.variances):
            comp = _gaussian_raw_moments(m, v, 4)
            for k in range(5):
                raw[k] += w * comp[k]
    elif isinstance(law, GriddedDensity):
        raw = [float(np.trapezoid(law.grid ** k * law.pdf, law.grid)) for k in range(5)]
    else:
        raise TypeError(f"unsupported law type: {type(law)!r}")
    mean = raw[1]
    return Moments(mean=mean, variance=raw[2] - mean ** 2, third=raw[3], fourth=raw[4])


def variance(law: InputLaw) -> float:
    return moments(law).variance


def gaussian_components(law: InputLaw):
    """View ``law`` as a Gaussian mixture: (weights, means, variances) arrays.

    Atoms map to zero-variance components.  Returns None for gridded laws,
    which have no finite mixture representation.
    """
    if isinstance(law, DiscreteAtoms):
        return law.probs, law.values, np.zeros_like(law.values)
    if isinstance(law, Gaussian):
        return (np.array([1.0]), np.array([law.mean]), np.array([law.variance]))
    if isinstance(law, GaussianMixture):
        return law.weights, law.means, law.variances
    return None


def convolve(law_a: InputLaw, law_b: InputLaw) -> InputLaw:
    """Law of X_A + X_B for independent inputs (mixture families only)."""
    ca = gaussian_components(law_a)
    cb = gaussian_components(law_b)
    if ca is None or cb is None:
        raise TypeError("convolve supports atom/Gaussian/mixture laws only")
    wa, ma, va = ca
    wb, mb, vb = cb
    w = np.outer(wa, wb).ravel()
    m = np.add.outer(ma, mb).ravel()
    v = np.add.outer(va, vb).ravel()
    if np.all(v > 0):
        return GaussianMixture(w, m, v)
    if np.all(v == 0):
        return DiscreteAtoms(*_merge_atoms(m, w))
    raise TypeError("mixed atom/density convolution with zero-variance parts unsupported")


def _merge_atoms(values: np.ndarray, probs: np.ndarray):
    order = np.argsort(values)
    values, probs = values[order], probs[order]
    out_v, out_p = [values[0]], [probs[0]]
    for v, p in zip(values[1:], probs[1:]):
        if v - out_v[-1] < 1e-12:
            out_p[-1] += p
        else:
            out_v.append(v)
            out_p.append(p)
    return np.array(out_v), np.array(out_p)


def sample(law: InputLaw, seed: int, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. samples; deterministic given ``seed``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return sample_with_rng(law, rng, n)


def sample_with_rng(law: InputLaw, rng: np.random.Generator, n: int) -> np.ndarray:
    if isinstance(law, DiscreteAtoms):
        idx = rng.choice(law.values.size, size=n, p=law.probs)
        return law.values[idx]
    if isinstance(law, Gaussian):
        return law.mean + np.sqrt(law.variance) * rng.standard_normal(n)
    if isinstance(law, GaussianMixture):
        idx = rng.choice(law.weights.size, size=n, p=law.weights)
        return law.means[idx] + np.sqrt(law.variances[idx]) * rng.standard_normal(n)
    if isinstance(law, GriddedDensity):
        return _sample_gridded(law, rng.random(n))
    raise TypeError(f"unsupported law type: {type(law)!r}")


def _sample_gridded(law: GriddedDensity, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling for a piecewise-linear density.

    Within a cell [x0, x1] the pdf is linear, so the CDF is a quadratic that
    is inverted exactly per cell.
    """
    x, p = law.grid, law.pdf
    h = np.diff(x)
    cell_mass = 0.5 * (p[:-1] + p[1:]) * h
    cdf = np.concatenate([[0.0], np.cumsum(cell_mass)])
    total = cdf[-1]
    u = u * total
    k = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, h.size - 1)
    r = u - cdf[k]                      # mass to place inside cell k
    p0, p1, hk = p[k], p[k + 1], h[k]
    slope = (p1 - p0) / hk
    # Solve 0.5*slope*t^2 + p0*t - r = 0 for t in [0, hk].
    with np.errstate(invalid="ignore", divide="ignore"):
        disc = np.sqrt(np.maximum(p0 ** 2 + 2.0 * slope * r, 0.0))
        t_quad = np.where(slope >= 0, (disc - p0) / slope, -(p0 - disc) / (-slope))
        t_lin = r / np.where(p0 > 0, p0, 1.0)
    t = np.where(np.abs(slope) * hk > 1e-14 * (p0 + p1 + 1e-300), t_quad, t_lin)
    t = np.clip(np.nan_to_num(t, nan=0.0), 0.0, hk)
    return x[k] + t
