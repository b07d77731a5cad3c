"""Information measures recovered from MMSE integrals over all snr.

For a discrete input, the mutual information of the scalar Gaussian channel
climbs to H(X) as snr grows, so H(X) = (1/2) integral of mmse(snr) dsnr.
Comparing the MMSE of a law against the Gaussian of the same variance in the
same way yields its non-Gaussianness (the KL divergence to that Gaussian),
hence its differential entropy and the entropy-power index gamma = exp(-D).
Mutual information between two finite variables falls out as the integrated
gap between unconditional and conditional estimation errors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import laws
from .errors import TailNotResolved
from .laws import DiscreteAtoms, Gaussian, GaussianMixture, InputLaw, variance
from .quadrature import QuadratureSpec
from .report import Report
from .scalar import ScalarChannel, mmse

_SNR_MIN = 1e-3
_POINTS_PER_DECADE = 40


@dataclass(frozen=True)
class TailPolicy:
    """Truncation control for the outer snr integral.

    tail_estimator:
      none            integrate to snr_max and stop
      gaussian_tail   fit the C/snr^2 decay of density laws at snr_max
      exponential_fit fit an exponential rate to the last decade of samples
    """
    snr_max: float = 80.0
    tail_estimator: str = "exponential_fit"

    def __post_init__(self):
        if self.snr_max < 1:
            raise ValueError("snr_max must be >= 1")
        if self.tail_estimator not in ("none", "gaussian_tail",
                                       "exponential_fit"):
            raise ValueError(f"unknown tail estimator {self.tail_estimator}")


@dataclass(frozen=True)
class JointAtoms:
    """Finite joint law of (X, Z) with real Z, as matched atom arrays."""
    x: np.ndarray
    z: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        z = np.asarray(self.z, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if not (x.shape == z.shape == p.shape) or x.ndim != 1:
            raise ValueError("x, z, probs must be matching 1-d arrays")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "probs", p)


def _snr_grid(snr_max: float) -> np.ndarray:
    n_decades = np.log10(snr_max / _SNR_MIN)
    n = int(round(_POINTS_PER_DECADE * n_decades)) + 1
    return np.geomspace(_SNR_MIN, snr_max, n)


def _exponential_tail(grid: np.ndarray, values: np.ndarray) -> float:
    """Integral beyond grid[-1] assuming values ~ A exp(-c snr).

    The rate c is fitted by least squares over the last decade of samples.
    Returns 0 when the integrand has already vanished.
    """
    if values[-1] <= 0 or values[-1] < 1e-300:
        return 0.0
    sel = (grid >= grid[-1] / 10) & (values > 0)
    if sel.sum() < 2:
        return 0.0
    slope = np.polyfit(grid[sel], np.log(values[sel]), 1)[0]
    if slope >= 0:
        return 0.0
    return float(values[-1] / (-slope))


def _integrate_curve(grid: np.ndarray, values: np.ndarray,
                     value_at_zero: float, tail: TailPolicy) -> float:
    """Head + log-space trapezoid + fitted tail of a decaying snr integrand.

    The main segment integrates snr*values against ln(snr), which is exact
    for integrands varying smoothly across decades; the head covers
    [0, grid[0]] by one trapezoid panel.
    """
    head = 0.5 * (value_at_zero + values[0]) * grid[0]
    main = float(np.trapezoid(values * grid, np.log(grid)))
    if tail.tail_estimator == "exponential_fit":
        tail_part = _exponential_tail(grid, values)
    elif tail.tail_estimator == "gaussian_tail":
        tail_part = float(values[-1] * grid[-1])
    else:
        tail_part = 0.0
    return head + main + tail_part


def _check_degenerate(atoms: DiscreteAtoms) -> None:
    live = atoms.probs[atoms.probs > 0]
    if live.size > 1 and np.any(live < 1e-6):
        raise ValueError(
            "atom probabilities below 1e-6 make the decay rate of the MMSE "
            "tail unreliable to fit; rejected")


def entropy_via_mmse(atoms: DiscreteAtoms, tail: TailPolicy | None = None,
                     g=None, quad: QuadratureSpec | None = None) -> float:
    """H(X) in nats as half the integral of mmse(g(X); snr) over all snr.

    g may be any injective map on the atom values (default identity); the
    limit does not depend on it because the integral only sees which atom
    was sent, not where it sits on the line.
    """
    tail = tail or TailPolicy()
    quad = quad or QuadratureSpec()
    values = atoms.values if g is None else np.asarray(
        [g(v) for v in atoms.values], dtype=float)
    if np.unique(values).size != values.size:
        raise ValueError("g must be injective on the atom values")
    _check_degenerate(atoms)
    law = DiscreteAtoms(values=values, probs=atoms.probs)
    if law.values.size == 1:
        return 0.0
    grid = _snr_grid(tail.snr_max)
    m = np.array([mmse(ScalarChannel(law, s, quad)) for s in grid])
    running = 0.5 * _integrate_curve(
        grid, m, variance(law),
        TailPolicy(tail.snr_max, "none"))
    if tail.tail_estimator == "none":
        if m[-1] > 1e-4 * max(running, 1e-12):
            raise TailNotResolved(
                f"mmse({tail.snr_max:g}) = {m[-1]:.3e} still contributes "
                "more than 1e-4 of the entropy estimate; raise snr_max or "
                "enable a tail estimator")
        return running
    return running + 0.5 * _exponential_tail(grid, m)


def _default_nongauss_tail(law: InputLaw) -> TailPolicy:
    if isinstance(law, DiscreteAtoms):
        return TailPolicy(snr_max=100.0, tail_estimator="none")
    return TailPolicy(snr_max=1e4, tail_estimator="gaussian_tail")


def nongauss_integrand(law: InputLaw, snr: float,
                       quad: QuadratureSpec | None = None) -> float:
    """sigma^2/(1 + snr sigma^2) - mmse(snr): the Gaussian MMSE excess."""
    quad = quad or QuadratureSpec()
    v = variance(law)
    return v / (1.0 + snr * v) - mmse(ScalarChannel(law, snr, quad))


def nongaussianness(law: InputLaw, tail: TailPolicy | None = None,
                    quad: QuadratureSpec | None = None) -> float:
    """KL divergence from the law to the Gaussian of equal mean and variance.

    D = (1/2) integral over snr of [sigma^2/(1 + snr sigma^2) - mmse(snr)].
    For laws with a density the integrand decays like C/snr^2 and the
    gaussian_tail estimator closes the integral; discrete laws have infinite
    divergence and the truncated running value at snr_max is returned.
    """
    tail = tail or _default_nongauss_tail(law)
    quad = quad or QuadratureSpec()

    def f(s):
        return nongauss_integrand(law, s, quad)

    cuts = np.concatenate(([0.0], np.geomspace(1e-2, tail.snr_max, 17)))
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        seg, _ = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-11,
                                limit=200)
        total += seg
    if isinstance(law, DiscreteAtoms) or tail.tail_estimator == "none":
        return 0.5 * total
    if tail.tail_estimator == "gaussian_tail":
        # f ~ C / snr^alpha beyond snr_max (alpha = 2 for smooth densities,
        # 3/2 with density jumps); fit alpha and close the power tail as
        # f(snr_max) * snr_max / (alpha - 1).
        s_fit = np.geomspace(tail.snr_max / 4, tail.snr_max, 5)
        f_fit = np.array([f(s) for s in s_fit])
        if f_fit[-1] > 0 and np.all(f_fit > 0):
            alpha = -np.polyfit(np.log(s_fit), np.log(f_fit), 1)[0]
            if alpha > 1.05:
                total += f_fit[-1] * tail.snr_max / (alpha - 1.0)
    else:
        grid = np.geomspace(tail.snr_max / 10, tail.snr_max, 8)
        total += _exponential_tail(grid, np.array([f(s) for s in grid]))
    return 0.5 * total


def differential_entropy_via_mmse(law: InputLaw,
                                  tail: TailPolicy | None = None,
                                  quad: QuadratureSpec | None = None) -> float:
    """h(X) = (1/2) log(2 pi e sigma^2) - nongaussianness, nats."""
    if isinstance(law, DiscreteAtoms):
        raise ValueError("differential entropy requires a law with a density")
    v = variance(law)
    return 0.5 * np.log(2.0 * np.pi * np.e * v) - nongaussianness(
        law, tail, quad)


def gamma_index(law: InputLaw, tail: TailPolicy | None = None,
                quad: QuadratureSpec | None = None) -> float:
    """gamma = exp(-D): 1 for Gaussian laws, smaller the harder to estimate."""
    return float(np.exp(-nongaussianness(law, tail, quad)))


def gamma_epi_check(law_a: InputLaw, law_b: InputLaw,
                    tail: TailPolicy | None = None,
                    quad: QuadratureSpec | None = None) -> Report:
    """Entropy-power inequality in gamma form for independent summands.

    With alpha = var_A / (var_A + var_B), checks
    alpha*gamma_A^2 + (1-alpha)*gamma_B^2 <= gamma_{A+B}^2.
    """
    g_a = gamma_index(law_a, tail, quad)
    g_b = gamma_index(law_b, tail, quad)
    g_sum = gamma_index(laws.convolve(law_a, law_b), tail, quad)
    v_a, v_b = variance(law_a), variance(law_b)
    alpha = v_a / (v_a + v_b)
    lhs = alpha * g_a**2 + (1.0 - alpha) * g_b**2
    report = Report("gamma-epi")
    report.add("alpha*gA^2 + (1-alpha)*gB^2 <= g_{A+B}^2 (clipped slack)",
               min(g_sum**2 - lhs, 0.0), 0.0, 1e-6)
    for name, g in (("gamma_A", g_a), ("gamma_B", g_b),
                    ("gamma_{A+B}", g_sum)):
        report.add(f"{name} in (0, 1] (clipped excess over 1)",
                   max(g - 1.0, 0.0), 0.0, 1e-9)
    report.notes = (f"gamma_A={g_a:.6f}, gamma_B={g_b:.6f}, "
                    f"gamma_sum={g_sum:.6f}, slack={g_sum**2 - lhs:.3e}")
    return report


def _conditional_slices(joint: JointAtoms):
    """Marginal law of Z plus (weight, conditional law of Z) per X value."""
    z_vals, z_probs = laws._merge_atoms(joint.z, joint.probs)
    marginal = DiscreteAtoms(values=z_vals, probs=z_probs)
    slices = []
    for xv in np.unique(joint.x):
        sel = joint.x == xv
        w = joint.probs[sel].sum()
        zv, zp = laws._merge_atoms(joint.z[sel], joint.probs[sel] / w)
        slices.append((float(w), DiscreteAtoms(values=zv, probs=zp)))
    return marginal, slices


def mi_via_mmse_difference(joint: JointAtoms,
                           tail: TailPolicy | None = None,
                           quad: QuadratureSpec | None = None) -> float:
    """I(X;Z) in nats from estimation errors of Z in Gaussian noise.

    Observing Y = sqrt(snr) Z + N, the gap between the second moments of
    E[Z|Y,X] and E[Z|Y] equals mmse(Z|Y) - E_X mmse(Z|Y,X); integrating half
    of that gap over all snr gives the mutual information.  The difference
    form avoids cancelling two near-equal second moments at low snr.
    """
    tail = tail or TailPolicy()
    quad = quad or QuadratureSpec()
    marginal, slices = _conditional_slices(joint)
    grid = _snr_grid(tail.snr_max)

    def gap(s):
        unconditional = mmse(ScalarChannel(marginal, s, quad))
        conditional = sum(
            w * mmse(ScalarChannel(law, s, quad)) if law.values.size > 1
            else 0.0
            for w, law in slices)
        return unconditional - conditional

    values = np.array([gap(s) for s in grid])
    var_cond = sum(w * variance(law) for w, law in slices)
    gap0 = variance(marginal) - var_cond
    return 0.5 * _integrate_curve(grid, np.maximum(values, 0.0), gap0, tail)
