"""Continuous-time white-noise channel dY_t = sqrt(snr) * X_t dt + dW_t.

Covers the random telegraph input (+/-1 Markov process with transition rate
nu): closed-form causal and noncausal MMSEs built from the one-sided
integrals f(i,j), the Wonham filter / two-filter smoother Monte Carlo,
Duncan's relation I = (snr/2)*cmmse, the causal = snr-averaged-noncausal
identity, stationary-Gaussian spectral formulas for the
Ornstein-Uhlenbeck family, and the constant-input time-snr transform.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import NonConvergence, StepTooLarge
from .laws import InputLaw, moments, sample_with_rng
from .quadrature import McConfig, QuadratureSpec, gauss_hermite
from .report import Report
from .scalar import ScalarChannel, fd_step, mmse as scalar_mmse


@dataclass(frozen=True)
class TelegraphModel:
    """+/-1 Markov input with transition rate nu, observed at a given snr."""
    nu: float
    snr: float

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.snr < 0:
            raise ValueError("snr must be nonnegative")

    @property
    def xi(self) -> float:
        return -2.0 * self.nu / self.snr


@dataclass(frozen=True)
class SamplePath:
    """One realized input path and its observation increments on a dt grid."""
    dt: float
    x: np.ndarray    # input value at the left edge of each step
    dy: np.ndarray   # observation increment over each step

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.x.shape != self.dy.shape:
            raise ValueError("x and dy must have equal lengths")


@dataclass(frozen=True)
class OUSpectrum:
    """Ornstein-Uhlenbeck power spectrum S(w) = 2*variance*beta/(beta^2+w^2)."""
    variance: float = 1.0
    beta: float = 1.0

    def __call__(self, omega):
        return 2.0 * self.variance * self.beta / (self.beta ** 2 + np.asarray(omega) ** 2)


@dataclass(frozen=True)
class FIntegralTable:
    """Values of f(i,j) = ∫_1^∞ u^{i/2} (u-1)^{j/2} e^{xi*u} du for i,j in {-1,1,3}."""
    xi: float
    values: dict


# ---------------------------------------------------------------------------
# f(i,j) integrals and telegraph closed forms
# ---------------------------------------------------------------------------

def f_scaled(i: int, j: int, xi: float) -> float:
    """e^{-xi} * f(i,j,xi), free of the e^{xi} underflow as xi -> -inf.

    Substituting u = 1 + v^2 regularizes the (u-1)^{-1/2} endpoint:
    e^{-xi} f(i,j) = 2 ∫_0^∞ (1+v^2)^{i/2} v^{j+1} e^{xi v^2} dv.
    """
    if xi >= 0:
        raise ValueError("xi must be negative")
    if j < -1:
        raise ValueError("j must be >= -1")

    def integrand(v):
        return 2.0 * (1.0 + v * v) ** (0.5 * i) * v ** (j + 1) * np.exp(xi * v * v)

    val, err = integrate.quad(integrand, 0.0, np.inf,
                              epsabs=1e-300, epsrel=1e-12, limit=400)
    if not np.isfinite(val) or (val != 0 and err > 1e-8 * abs(val)):
        raise NonConvergence(f"f integral did not converge at i={i}, j={j}, xi={xi}")
    return val


def f_integral(i: int, j: int, xi: float) -> float:
    """f(i,j) = ∫_1^∞ u^{i/2} (u-1)^{j/2} e^{xi*u} du for xi < 0."""
    return np.exp(xi) * f_scaled(i, j, xi)


def build_f_table(xi: float) -> FIntegralTable:
    values = {(i, j): f_integral(i, j, xi) for i in (-1, 1, 3) for j in (-1, 1, 3)}
    return FIntegralTable(xi, values)


def verify_f_recurrences(xi: float, rel_tol: float = 1e-8) -> Report:
    """The three algebraic/differential recurrences of the f(i,j) family."""
    report = Report("f-recurrences")
    f = lambda i, j: f_integral(i, j, xi)
    # f(i,j) = f(i+2,j) - f(i,j+2)
    for (i, j) in [(-1, -1), (1, -1), (-1, 1)]:
        lhs, rhs = f(i, j), f(i + 2, j) - f(i, j + 2)
        report.add(f"difference recurrence (i,j)=({i},{j})", lhs, rhs,
                   rel_tol * abs(lhs))
    # -xi f(i,j) = (i/2) f(i-2,j) + (j/2) f(i,j-2)
    for (i, j) in [(1, 1), (3, 1), (1, 3)]:
        lhs = -xi * f(i, j)
        rhs = 0.5 * i * f(i - 2, j) + 0.5 * j * f(i, j - 2)
        report.add(f"parts recurrence (i,j)=({i},{j})", lhs, rhs, rel_tol * abs(lhs))
    # d f(i,j)/d xi = f(i+2,j), by central finite difference
    h = 1e-6 * max(1.0, abs(xi))
    for (i, j) in [(-1, -1), (1, -1)]:
        fd = (f_integral(i, j, xi + h) - f_integral(i, j, xi - h)) / (2 * h)
        rhs = f(i + 2, j)
        report.add(f"xi-derivative (i,j)=({i},{j})", fd, rhs, 1e-6 * abs(rhs))
    return report


def telegraph_cmmse(m: TelegraphModel) -> float:
    """Causal (filtering) MMSE of the random telegraph input: f(-1,-1)/f(1,-1)."""
    if m.snr == 0:
        return 1.0
    xi = m.xi
    return f_scaled(-1, -1, xi) / f_scaled(1, -1, xi)


def _g_double(xi: float, order: int) -> float:
    """G(xi) = ∫∫_{a,b>0} sqrt((1+a^2)(1+b^2)) e^{xi(a^2+b^2)} / (1+a^2+b^2) da db,
    by a tensor Gauss-Hermite rule after scaling a = p/sqrt(-xi)."""
    lam = -xi
    z, w = gauss_hermite(order)           # sum(w)=1, weight e^{-p^2/2}/sqrt(2pi)
    # convert to the e^{-p^2} weight on the half line
    p = np.abs(z) / np.sqrt(2.0)
    a = p / np.sqrt(lam)
    a2 = a * a
    sq = np.sqrt(1.0 + a2)
    num = np.outer(sq, sq)
    den = 1.0 + a2[:, None] + a2[None, :]
    # Each half-line e^{-t^2} integral is (sqrt(pi)/2) times a full-line
    # standard-normal expectation, so G = pi/(4 lam) * E_{z,z'}[...].
    val = float(w @ (num / den) @ w)
    return val * np.pi / (4.0 * lam)


def telegraph_mmse(m: TelegraphModel, tol: float = 1e-9) -> float:
    """Noncausal (smoothing) MMSE of the random telegraph input.

    Uses the regularized two-sided integral 4*G(xi)/f_scaled(1,-1)^2 in the
    substituted coordinates; the Gauss-Hermite tensor order doubles until two
    levels agree to tol.
    """
    if m.snr == 0:
        return 1.0
    xi = m.xi
    order = 96
    prev = _g_double(xi, order)
    while order <= 1536:
        order *= 2
        cur = _g_double(xi, order)
        if abs(cur - prev) < tol:
            return 4.0 * cur / f_scaled(1, -1, xi) ** 2
        prev = cur
    raise NonConvergence("telegraph_mmse tensor quadrature did not converge")


def thm7_differential_check(nu: float, snr: float, delta_fd: float = 1e-5,
                            tolerance: float = 1e-4) -> Report:
    """Differential form of the causal/noncausal identity.

    Checks mmse(snr) = d/dsnr [snr * cmmse(snr)], plus the equivalent scaled
    f-family identity A(xi) + A'(xi) = F(1,-1)^2 with
    A = F(-1,-1)F(1,-1) - xi F(1,-1)^2 + xi F(-1,-1)F(3,-1) and F = e^{-xi} f.
    """
    report = Report("thm7-differential")
    d = fd_step(delta_fd, snr)
    hi, lo = snr + d, snr - d
    fd = (hi * telegraph_cmmse(TelegraphModel(nu, hi))
          - lo * telegraph_cmmse(TelegraphModel(nu, lo))) / (2 * d)
    report.add(f"mmse vs d/dsnr[snr*cmmse] at snr={snr:g}", fd,
               telegraph_mmse(TelegraphModel(nu, snr)), tolerance)

    xi = TelegraphModel(nu, snr).xi

    def a_of(x):
        f11, fm1, f31 = f_scaled(1, -1, x), f_scaled(-1, -1, x), f_scaled(3, -1, x)
        return fm1 * f11 - x * f11 ** 2 + x * fm1 * f31

    h = 1e-5 * max(1.0, abs(xi))
    a_prime = (a_of(xi + h) - a_of(xi - h)) / (2 * h)
    lhs = a_of(xi) + a_prime
    rhs = f_scaled(1, -1, xi) ** 2
    report.add(f"A + A' vs F(1,-1)^2 at xi={xi:g}", lhs, rhs,
               tolerance * max(abs(rhs), 1.0))
    return report


def verify_thm7(nu: float, snr_grid, tolerance: float = 1e-4) -> Report:
    """cmmse(snr) = (1/snr) ∫_0^snr mmse(g) dg for the telegraph input.

    The right side may be read as E[mmse(G)] with G ~ Uniform(0, snr).
    """
    report = Report("thm7-telegraph")
    report.notes = ("rhs equals E[mmse(G)] for G uniform on (0, snr); "
                    "quadrature of the noncausal MMSE over the snr interval")
    for s in np.atleast_1d(snr_grid):
        s = float(s)
        val, _ = integrate.quad(lambda g: telegraph_mmse(TelegraphModel(nu, g)),
                                0.0, s, epsabs=1e-9, epsrel=1e-9, limit=100)
        report.add(f"cmmse vs snr-averaged mmse at snr={s:g}",
                   telegraph_cmmse(TelegraphModel(nu, s)), val / s, tolerance)
    return report


def duncan_check(m: TelegraphModel, tolerance: float = 1e-4) -> Report:
    """Information rate two ways: (snr/2)*cmmse vs (1/2)∫_0^snr mmse dg."""
    report = Report("duncan-telegraph")
    route_a = 0.5 * m.snr * telegraph_cmmse(m)
    route_b, _ = integrate.quad(
        lambda g: 0.5 * telegraph_mmse(TelegraphModel(m.nu, g)),
        0.0, m.snr, epsabs=1e-9, epsrel=1e-9, limit=100)
    report.add(f"(snr/2)*cmmse vs half-integral of mmse at snr={m.snr:g}",
               route_a, route_b, tolerance)
    return report


# ---------------------------------------------------------------------------
# Telegraph path simulation, Wonham filter, two-filter smoother
# ---------------------------------------------------------------------------

def _check_step(nu: float, snr: float, dt: float) -> None:
    if dt > 0.01 / max(nu, snr):
        raise StepTooLarge(
            f"dt={dt:g} exceeds 0.01/max(nu, snr)={0.01 / max(nu, snr):g}")


def _telegraph_paths(nu: float, snr: float, n_steps: int, dt: float,
                     n_paths: int, rng: np.random.Generator):
    """Exact-holding-time telegraph paths on a dt grid.

    Returns (x_edges, dy): x_edges[p, k] is the state at t_k (shape
    (n_paths, n_steps+1)); dy[p, k] is sqrt(snr) * ∫ X dt + dW over step k,
    with the occupation integral computed exactly from the flip times.
    """
    horizon = n_steps * dt
    x0 = rng.choice(np.array([-1.0, 1.0]), size=n_paths)
    # flip times: cumulative exponential holding times, enough columns that
    # running past the horizon is (astronomically) unlikely
    mean_flips = nu * horizon
    m_cols = int(mean_flips + 10.0 * np.sqrt(mean_flips + 1.0) + 25)
    flips = np.cumsum(rng.exponential(1.0 / nu, size=(n_paths, m_cols)), axis=1)
    while np.any(flips[:, -1] < horizon):
        extra = np.cumsum(rng.exponential(1.0 / nu, size=(n_paths, m_cols)), axis=1)
        flips = np.concatenate([flips, flips[:, -1:] + extra], axis=1)
    valid = flips < horizon
    rows, cols = np.nonzero(valid)
    ft = flips[rows, cols]
    step_idx = np.minimum((ft / dt).astype(np.int64), n_steps - 1)

    counts = np.zeros((n_paths, n_steps), dtype=np.int64)
    np.add.at(counts, (rows, step_idx), 1)
    edge_parity = np.concatenate(
        [np.zeros((n_paths, 1), dtype=np.int64), np.cumsum(counts, axis=1)], axis=1)
    x_edges = x0[:, None] * np.where(edge_parity % 2 == 0, 1.0, -1.0)

    # exact occupation integral per step: left-state * dt plus a correction
    # 2 * (state before the flip) * (flip time - step end) per flip
    occ = x_edges[:, :-1] * dt
    state_before = x0[rows] * np.where(cols % 2 == 0, 1.0, -1.0)
    np.add.at(occ, (rows, step_idx),
              2.0 * state_before * (ft - (step_idx + 1) * dt))
    dy = np.sqrt(snr) * occ + np.sqrt(dt) * rng.standard_normal((n_paths, n_steps))
    return x_edges, dy


def simulate_telegraph(m: TelegraphModel, T: float, dt: float, seed: int) -> SamplePath:
    """One telegraph sample path with exact exponential holding times."""
    _check_step(m.nu, m.snr, dt)
    n_steps = int(round(T / dt))
    rng = np.random.default_rng(seed)
    x_edges, dy = _telegraph_paths(m.nu, m.snr, n_steps, dt, 1, rng)
    return SamplePath(dt, x_edges[0, :-1].copy(), dy[0].copy())


def _wonham_step(xh: np.ndarray, dy: np.ndarray, nu: float, snr: float,
                 dt: float) -> np.ndarray:
    one_minus = 1.0 - xh * xh
    xh = xh + (-2.0 * nu * xh - snr * xh * one_minus) * dt \
        + np.sqrt(snr) * one_minus * dy
    return np.clip(xh, -1.0 + 1e-12, 1.0 - 1e-12)


def wonham_filter(path: SamplePath, snr: float, nu: float) -> np.ndarray:
    """Causal posterior mean sequence; entry k estimates X at t_k = k*dt.

    Euler-Maruyama integration of the filter SDE
    dX̂ = -[2 nu X̂ + snr X̂ (1 - X̂²)] dt + sqrt(snr) (1 - X̂²) dY
    from the stationary prior mean X̂_0 = 0.
    """
    _check_step(nu, snr, path.dt)
    n = path.dy.size
    out = np.zeros(n + 1)
    xh = np.zeros(1)
    for k in range(n):
        xh = _wonham_step(xh, path.dy[k], nu, snr, path.dt)
        out[k + 1] = xh[0]
    return out


def yao_smoother(forward: np.ndarray, backward: np.ndarray) -> np.ndarray:
    """Combine forward and backward filter means: (f + b) / (1 + f*b)."""
    forward = np.asarray(forward, dtype=float)
    backward = np.asarray(backward, dtype=float)
    return (forward + backward) / (1.0 + forward * backward)


@dataclass(frozen=True)
class EnsembleResult:
    """Ensemble MSE estimates for the Wonham filter and two-filter smoother."""
    cmmse: float
    cmmse_se: float
    smmse: float
    smmse_se: float
    anticausal: float
    anticausal_se: float
    n_paths: int
    dt: float
    horizon: float
    burn_in: float


def wonham_ensemble(m: TelegraphModel, mc: McConfig,
                    chunk: int = 2000) -> EnsembleResult:
    """Monte Carlo MSEs of filter, anticausal filter and smoother.

    Causal and anticausal errors are time-averaged over [burn_in, T] (resp.
    its mirror); the smoother over [burn_in, T - burn_in].  Per-path time
    averages are i.i.d. across paths, so the reported SE is the ensemble
    standard error of those averages.
    """
    nu, snr, dt, horizon = m.nu, m.snr, mc.dt, mc.horizon
    _check_step(nu, snr, dt)
    n_steps = int(round(horizon / dt))
    burn = min(10.0 / nu, horizon / 2.0)
    k0 = int(round(burn / dt))
    k1 = n_steps  # causal window [k0, n_steps]
    burn_sm = min(10.0 / nu, horizon / 3.0)
    sm_lo = int(round(burn_sm / dt))
    sm_hi = n_steps - sm_lo
    if sm_hi <= sm_lo:
        raise ValueError("horizon too short for the smoother window")
    rng = np.random.default_rng(mc.seed)
    cms, ams, sms = [], [], []
    remaining = mc.n_paths
    while remaining > 0:
        p = min(chunk, remaining)
        remaining -= p
        x_edges, dy = _telegraph_paths(nu, snr, n_steps, dt, p, rng)
        # forward filter, storing the trajectory for the smoother combine
        fwd = np.zeros((p, n_steps + 1), dtype=np.float32)
        xh = np.zeros(p)
        for k in range(n_steps):
            xh = _wonham_step(xh, dy[:, k], nu, snr, dt)
            fwd[:, k + 1] = xh
        err_c = (x_edges[:, k0:k1 + 1] - fwd[:, k0:k1 + 1]) ** 2
        cms.append(err_c.mean(axis=1))
        # backward filter on reversed increments; bh_k estimates X at t_{n-k}
        bwd_err_acc = np.zeros(p)
        sm_err_acc = np.zeros(p)
        bh = np.zeros(p)
        n_anti = 0
        for k in range(n_steps):
            bh = _wonham_step(bh, dy[:, n_steps - 1 - k], nu, snr, dt)
            idx = n_steps - 1 - k      # bh now estimates X at t_idx from the future
            if idx <= n_steps - k0:
                bwd_err_acc += (x_edges[:, idx] - bh) ** 2
                n_anti += 1
            if sm_lo <= idx <= sm_hi:
                sm = yao_smoother(fwd[:, idx].astype(float), bh)
                sm_err_acc += (x_edges[:, idx] - sm) ** 2
        ams.append(bwd_err_acc / n_anti)
        sms.append(sm_err_acc / (sm_hi - sm_lo + 1))
    cvals, avals, svals = (np.concatenate(v) for v in (cms, ams, sms))
    n = cvals.size

    def mse(v):
        return float(v.mean()), float(v.std(ddof=1) / np.sqrt(n))

    cm, cse = mse(cvals)
    am, ase = mse(avals)
    sm, sse = mse(svals)
    return EnsembleResult(cm, cse, sm, sse, am, ase, n, dt, horizon, burn)


# ---------------------------------------------------------------------------
# Stationary Gaussian spectra (Ornstein-Uhlenbeck family)
# ---------------------------------------------------------------------------

def spectral_quantities(spectrum: OUSpectrum, snr: float):
    """(mi_rate, mmse_nc, cmmse) by frequency quadrature of the spectrum.

    mi_rate = (1/4pi) ∫ log(1 + snr S) dw, mmse = (1/2pi) ∫ S/(1+snr S) dw,
    cmmse = 2 * mi_rate / snr evaluated through its own log-integrand.
    """
    if snr == 0:
        return 0.0, spectrum.variance, spectrum.variance

    def log_term(w):
        return np.log1p(snr * spectrum(w))

    def wiener_term(w):
        s = spectrum(w)
        return s / (1.0 + snr * s)

    opts = dict(epsabs=1e-12, epsrel=1e-12, limit=400)
    log_int, _ = integrate.quad(log_term, 0.0, np.inf, **opts)
    mmse_nc, _ = integrate.quad(wiener_term, 0.0, np.inf, **opts)
    log_int2, _ = integrate.quad(log_term, 0.0, np.inf, **opts)
    mi_rate = log_int / (2.0 * np.pi)
    return mi_rate, mmse_nc / np.pi, log_int2 / (np.pi * snr)


def ou_closed_forms(spectrum: OUSpectrum, snr: float):
    """Contour-integral closed forms for the OU spectrum."""
    beta, var = spectrum.beta, spectrum.variance
    if snr == 0:
        return 0.0, var, var
    a = np.sqrt(beta ** 2 + 2.0 * beta * var * snr)
    return 0.5 * (a - beta), var * beta / a, (a - beta) / snr


def spectral_report(spectrum: OUSpectrum, snr: float,
                    delta_fd: float = 1e-5) -> Report:
    """Spectral quadrature vs closed forms plus the built-in consistency ties."""
    mi_rate, mmse_nc, cmmse = spectral_quantities(spectrum, snr)
    mi_c, mmse_c, cmmse_c = ou_closed_forms(spectrum, snr)
    report = Report("spectral-ou")
    report.add("mi_rate vs closed form", mi_rate, mi_c, 1e-8)
    report.add("mmse vs closed form", mmse_nc, mmse_c, 1e-8)
    report.add("cmmse vs closed form", cmmse, cmmse_c, 1e-8)
    report.add("snr*cmmse vs 2*mi_rate", snr * cmmse, 2.0 * mi_rate, 1e-10)
    d = fd_step(delta_fd, snr)
    fd = (spectral_quantities(spectrum, snr + d)[0]
          - spectral_quantities(spectrum, max(snr - d, 0.0))[0]) / (
              snr + d - max(snr - d, 0.0))
    report.add("d(mi_rate)/dsnr vs mmse/2", fd, 0.5 * mmse_nc, 1e-6)
    return report


# ---------------------------------------------------------------------------
# Constant-input time-snr transform
# ---------------------------------------------------------------------------

def time_snr_transform_check(law: InputLaw, snr: float, u: float = 0.5,
                             mc: McConfig = McConfig(),
                             quad: QuadratureSpec = QuadratureSpec()) -> Report:
    """Constant input X_t = X on [0,1]: causal MSE at time u equals the scalar
    MMSE at snr*u.

    Y_u = sqrt(snr)*u*X + W_u is a sufficient statistic for the observation up
    to u, so Y_u/sqrt(u) realizes a scalar channel at snr*u; the ensemble MSE
    of the scalar conditional mean applied to it is compared to mmse(u*snr).
    """
    report = Report("time-snr-transform")
    rng = np.random.default_rng(mc.seed)
    n = mc.n_paths
    x = sample_with_rng(law, rng, n)
    if u == 0:
        report.add("prior variance at u=0", moments(law).variance,
                   moments(law).variance, 0.0)
        return report
    y_u = np.sqrt(snr) * u * x + np.sqrt(u) * rng.standard_normal(n)
    ch = ScalarChannel(law, u * snr, quad)
    from .scalar import conditional_mean
    xhat = conditional_mean(ch, y_u / np.sqrt(u))
    err = (x - xhat) ** 2
    se = float(err.std(ddof=1) / np.sqrt(n))
    report.add(f"ensemble causal MSE at u={u:g} vs scalar mmse({u * snr:g})",
               float(err.mean()), scalar_mmse(ch), 3.0 * se)
    report.notes = f"standard error {se:.3e}"
    return report


def time_snr_average_check(law: InputLaw, snr: float, n_u: int = 41,
                           quad: QuadratureSpec = QuadratureSpec(),
                           tolerance: float = 1e-6) -> Report:
    """Time-averaged causal MSE over u in [0,1] vs (1/snr) ∫_0^snr mmse."""
    us = np.linspace(0.0, 1.0, n_u)
    vals = [scalar_mmse(ScalarChannel(law, float(u * snr), quad)) for u in us]
    time_avg = float(np.trapezoid(vals, us))
    rhs, _ = integrate.quad(
        lambda g: scalar_mmse(ScalarChannel(law, g, quad)) / snr, 0.0, snr,
        epsabs=1e-10, epsrel=1e-10, limit=200)
    report = Report("time-snr-average")
    report.add("time-averaged causal MSE vs snr-averaged mmse",
               time_avg, rhs, max(tolerance, 1.0 / n_u ** 2))
    return report
