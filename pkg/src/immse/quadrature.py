"""Quadrature backbone: Gauss-Hermite expectations over the channel output.

The central primitive is ``integrate_output(f, law, snr, spec)`` which
evaluates E[f(Y)] = ∫ f(y) p_Y(y) dy for Y = sqrt(snr)*X + N.  Rather than
building one global y-grid, the expectation is decomposed as E_X ⊗ E_N:

* atom / Gaussian / mixture laws: the output density is an exact Gaussian
  mixture, and each component expectation is a Gauss-Hermite sum,
* gridded laws: trapezoid over the input grid tensored with Gauss-Hermite
  over the noise.

Refinement doubles the Gauss-Hermite order until two successive levels agree
to ``adaptive_tol``; NonConvergence is raised when the order cap is reached.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite

from .errors import NonConvergence
from .laws import GriddedDensity, InputLaw, gaussian_components


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for output-domain integration.

    hermite_order: starting Gauss-Hermite order (covers ~sqrt(2*order) output
        standard deviations per mixture component).
    adaptive_tol: absolute agreement target between refinement levels.
    y_cutoff: half-width, in output standard deviations, of the composite
        y-window used for gridded-density laws.
    """
    hermite_order: int = 127
    adaptive_tol: float = 1e-10
    y_cutoff: float = 12.0
    max_order: int = 2100

    def __post_init__(self):
        if self.hermite_order < 2:
            raise ValueError("hermite_order must be >= 2")
        if self.adaptive_tol <= 0:
            raise ValueError("adaptive_tol must be positive")


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo / SDE controls."""
    seed: int = 0
    n_paths: int = 100_000
    dt: float = 1e-3
    horizon: float = 10.0


@lru_cache(maxsize=64)
def gauss_hermite(order: int):
    """Nodes z and weights w with sum(w) = 1 so that E_{N(0,1)}[g] ≈ sum(w*g(z))."""
    x, w = roots_hermite(order)
    return np.sqrt(2.0) * x, w / np.sqrt(np.pi)


def normal_expectation(g, mean: float, var: float, order: int) -> float:
    """E[g(V)] for V ~ N(mean, var) by Gauss-Hermite at the given order."""
    z, w = gauss_hermite(order)
    return float(w @ g(mean + np.sqrt(var) * z))


def _fixed_order_expectation(f, law: InputLaw, snr: float, order: int,
                             spec: QuadratureSpec) -> float:
    root_snr = np.sqrt(snr)
    comps = gaussian_components(law)
    if comps is not None:
        w, m, v = comps
        total = 0.0
        z, gw = gauss_hermite(order)
        for wk, mk, vk in zip(w, m, v):
            if wk == 0.0:
                continue
            sd = np.sqrt(1.0 + snr * vk)
            total += wk * float(gw @ f(root_snr * mk + sd * z))
        return total
    if isinstance(law, GriddedDensity):
        raise TypeError("gridded laws use the y-window composite rule")
    raise TypeError(f"unsupported law type: {type(law)!r}")


@lru_cache(maxsize=16)
def _gauss_legendre(order: int):
    return np.polynomial.legendre.leggauss(order)


def _gridded_window(law: GriddedDensity, snr: float, spec: QuadratureSpec):
    x, pdf = law.grid, law.pdf
    mean = np.trapezoid(x * pdf, x)
    var = max(np.trapezoid(x ** 2 * pdf, x) - mean ** 2, 0.0)
    center = np.sqrt(snr) * mean
    half = spec.y_cutoff * np.sqrt(1.0 + snr * var)
    return center - half, center + half


def _gridded_density(law: GriddedDensity, snr: float, y: np.ndarray) -> np.ndarray:
    """Output density for a gridded input, trapezoid over the input grid."""
    x, pdf = law.grid, law.pdf
    rs = np.sqrt(snr)
    out = np.empty_like(y)
    chunk = 2048
    for lo in range(0, y.size, chunk):
        ys = y[lo:lo + chunk, None]
        kern = np.exp(-0.5 * (ys - rs * x[None, :]) ** 2) / np.sqrt(2 * np.pi)
        out[lo:lo + chunk] = np.trapezoid(kern * pdf[None, :], x, axis=1)
    return out


def _gridded_expectation(f, law: GriddedDensity, snr: float, panels: int,
                         spec: QuadratureSpec) -> float:
    """E[f(Y)] = ∫ f(y) p_Y(y) dy on the y-window, composite 12-point Gauss-Legendre."""
    a, b = _gridded_window(law, snr, spec)
    edges = np.linspace(a, b, panels + 1)
    nodes, weights = _gauss_legendre(12)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    y = (mid[:, None] + half * nodes[None, :]).ravel()
    w = (half * np.broadcast_to(weights, (panels, weights.size))).ravel()
    dens = _gridded_density(law, snr, y)
    return float(np.sum(w * f(y) * dens))


def integrate_output(f, law: InputLaw, snr: float,
                     spec: QuadratureSpec = QuadratureSpec()) -> float:
    """E[f(Y)] for Y = sqrt(snr)*X + N, refined to spec.adaptive_tol.

    ``f`` must accept numpy arrays elementwise.
    """
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    if isinstance(law, GriddedDensity):
        panels, cap = 64, 2048
        prev = _gridded_expectation(f, law, snr, panels, spec)
        while True:
            panels *= 2
            if panels > cap:
                raise NonConvergence(
                    f"y-window quadrature stalled above tol={spec.adaptive_tol:g}")
            cur = _gridded_expectation(f, law, snr, panels, spec)
            if abs(cur - prev) < spec.adaptive_tol:
                return cur
            prev = cur
    order = spec.hermite_order
    prev = _fixed_order_expectation(f, law, snr, order, spec)
    while True:
        order = 2 * order + 1
        if order > spec.max_order:
            raise NonConvergence(
                f"output quadrature stalled above tol={spec.adaptive_tol:g} "
                f"at order {order}")
        cur = _fixed_order_expectation(f, law, snr, order, spec)
        if abs(cur - prev) < spec.adaptive_tol:
            return cur
        prev = cur
