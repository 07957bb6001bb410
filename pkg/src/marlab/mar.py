"""
Mixed causal-noncausal autoregressions MAR(r, s):

    Phi(L) Psi(L^-1) y_t = eps_t,
    Phi(L) = 1 - phi_1 L - ... - phi_r L^r,
    Psi(L^-1) = 1 - psi_1 L^-1 - ... - psi_s L^-s,

with iid Student-t (or Cauchy) errors. Roots of both polynomials must lie
outside the unit circle; the non-Gaussian errors are what makes the split
between the lag and lead parts identifiable.

Estimation maximises the approximate likelihood built from the pseudo
residuals eps_t(phi, psi) over t = r+1 .. T-s, jointly with the error
distribution parameters, under multi-start to escape the lag/lead-switch
local maxima. Identification first picks the pseudo lag order p of an
ordinary AR fit by information criterion (lag and lead dynamics are
indistinguishable from autocovariances alone), then compares all (r, s)
splits with r + s = p by likelihood.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from .errors import DataError, EstimationError
from .series import TimeSeries, as_values

STATIONARITY_MARGIN = 1e-6


def student_t_logpdf(x, dof: float, scale: float):
    """Log density of the location-0 Student-t with `dof` d.o.f. and scale."""
    if dof <= 0 or scale <= 0:
        raise DataError("dof and scale must be positive")
    x = np.asarray(x, dtype=float)
    z = x / scale
    return (gammaln((dof + 1.0) / 2.0) - gammaln(dof / 2.0)
            - 0.5 * np.log(dof * np.pi) - np.log(scale)
            - (dof + 1.0) / 2.0 * np.log1p(z * z / dof))


def min_root_modulus(coeffs) -> float:
    """
    Smallest root modulus of 1 - c_1 z - ... - c_k z^k.

    Returns inf for the degree-0 polynomial. Stationarity requires the
    value to exceed 1.
    """
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    while c.size and c[-1] == 0.0:
        c = c[:-1]
    k = c.size
    if k == 0:
        return np.inf
    if k == 1:
        return 1.0 / abs(c[0])
    if k == 2:
        # c2 z^2 + c1 z - 1 = 0
        disc = c[0] * c[0] + 4.0 * c[1]
        if disc < 0.0:
            return 1.0 / np.sqrt(-c[1])
        sq = np.sqrt(disc)
        r1 = (-c[0] + sq) / (2.0 * c[1])
        r2 = (-c[0] - sq) / (2.0 * c[1])
        return min(abs(r1), abs(r2))
    roots = np.roots(np.concatenate([-c[::-1], [1.0]]))
    return float(np.abs(roots).min())


@dataclass(frozen=True)
class ErrorDist:
    """Error distribution; Cauchy is stored as Student-t with dof = 1."""

    kind: str            # student_t | cauchy
    dof: float
    scale: float

    def __post_init__(self):
        if self.kind not in ("student_t", "cauchy"):
            raise DataError(f"unknown error distribution {self.kind!r}")
        if self.kind == "cauchy" and self.dof != 1.0:
            raise DataError("cauchy errors have dof fixed at 1")
        if self.dof <= 0 or self.scale <= 0:
            raise DataError("dof and scale must be positive")

    @classmethod
    def student_t(cls, dof: float, scale: float = 1.0) -> "ErrorDist":
        return cls("student_t", float(dof), float(scale))

    @classmethod
    def cauchy(cls, scale: float = 1.0) -> "ErrorDist":
        return cls("cauchy", 1.0, float(scale))

    def logpdf(self, x):
        return student_t_logpdf(x, self.dof, self.scale)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.standard_t(self.dof, size=size) * self.scale


@dataclass(frozen=True)
class MarModel:
    """MAR(r, s) with stationary lag and lead polynomials."""

    phi: np.ndarray
    psi: np.ndarray
    dist: ErrorDist
    intercept: float = 0.0

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float).reshape(-1)
        psi = np.asarray(self.psi, dtype=float).reshape(-1)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)
        for name, c in (("lag", phi), ("lead", psi)):
            if min_root_modulus(c) <= 1.0:
                raise DataError(f"nonstationary {name} polynomial {c}")

    @property
    def r(self) -> int:
        return self.phi.size

    @property
    def s(self) -> int:
        return self.psi.size


@dataclass
class OrderSelection:
    """Pseudo AR lag order chosen by information criterion."""

    p: int
    criterion: str
    values: np.ndarray    # criterion values for p = p_min .. p_max
    p_min: int

    def value_at(self, p: int) -> float:
        return float(self.values[p - self.p_min])


@dataclass
class FittedMar:
    """Estimated model plus the residual paths it implies on its sample."""

    model: MarModel
    loglik: float
    std_errors: np.ndarray | None    # for (phi..., psi..., dof, scale); NaN where fixed
    residuals: np.ndarray            # eps_t, t = r+1 .. T-s, intercept-adjusted scale
    u_path: np.ndarray               # u_t = Phi(L)(y_t - mean), t = r+1 .. T
    p_used: int
    sample_length: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def r(self) -> int:
        return self.model.r

    @property
    def s(self) -> int:
        return self.model.s

    def to_dict(self) -> dict:
        se = None
        if self.std_errors is not None:
            se = [float(v) for v in self.std_errors]
        return {
            "r": self.r,
            "s": self.s,
            "phi": [float(v) for v in self.model.phi],
            "psi": [float(v) for v in self.model.psi],
            "dist": self.model.dist.kind,
            "dof": float(self.model.dist.dof),
            "scale": float(self.model.dist.scale),
            "intercept": float(self.model.intercept),
            "loglik": float(self.loglik),
            "std_errors": se,
            "p_used": self.p_used,
            "sample_length": self.sample_length,
            "diagnostics": {k: v for k, v in self.diagnostics.items()
                            if isinstance(v, (int, float, str, bool))},
        }


def simulate(model: MarModel, n: int, seed=None, burn: int = 200,
             return_errors: bool = False, errors: np.ndarray | None = None):
    """
    Simulate n observations of a MAR process.

    Draws n + 2*burn iid errors, builds the lead component u by backward
    recursion from terminal zeros (u_t = psi_1 u_{t+1} + ... + eps_t), the
    observable by forward recursion from zero initials, and keeps the
    central n points, so both truncation edges are burn steps away.
    Deterministic given (model, n, seed, burn); pre-drawn `errors` of
    length n + 2*burn may be supplied instead of a seed.

    With return_errors=True also returns the error draws aligned with the
    kept window, which pseudo_residual_path recovers up to truncation.
    """
    if n < 1:
        raise DataError("n must be >= 1")
    if burn < 50:
        raise DataError("burn must be >= 50")
    total = n + 2 * burn
    if errors is not None:
        eps = np.asarray(errors, dtype=float)
        if eps.shape != (total,):
            raise DataError(f"errors must have length n + 2*burn = {total}")
    else:
        if seed is None:
            raise DataError("simulate needs a seed when errors are not supplied")
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        eps = model.dist.sample(rng, total)
    r, s = model.r, model.s
    if s > 0:
        u = eps.copy()
        for t in range(total - 2, -1, -1):
            acc = u[t]
            for j in range(min(s, total - 1 - t)):
                acc += model.psi[j] * u[t + 1 + j]
            u[t] = acc
    else:
        u = eps
    if r > 0:
        y = np.zeros(total)
        for t in range(total):
            acc = u[t]
            for i in range(min(r, t)):
                acc += model.phi[i] * y[t - 1 - i]
            y[t] = acc
    else:
        y = u
    out = TimeSeries(y[burn:burn + n] + model.intercept,
                     label=f"simulated MAR({r},{s})")
    if return_errors:
        return out, eps[burn:burn + n].copy()
    return out


def pseudo_residual_path(series, r: int, s: int, phi, psi):
    """
    Residual paths implied by given coefficients on an observed sample:

        u_t   = y_t - sum_i phi_i y_{t-i}        for t = r+1 .. T
        eps_t = u_t - sum_j psi_j u_{t+j}        for t = r+1 .. T-s

    Returns (eps, u).
    """
    y = as_values(series)
    T = y.size
    if T <= r + s:
        raise DataError(f"need T > r + s (T={T}, r={r}, s={s})")
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    u = y[r:].copy()
    for i in range(r):
        u -= phi[i] * y[r - 1 - i:T - 1 - i]
    if s == 0:
        return u.copy(), u
    m = u.size - s
    eps = u[:m].copy()
    for j in range(s):
        eps -= psi[j] * u[j + 1:m + j + 1]
    return eps, u


_LOG_DOF_LO, _LOG_DOF_HI = np.log(0.3), np.log(100.0)


def _unpack(theta, r, s, fixed_dof):
    phi = theta[:r]
    psi = theta[r:r + s]
    if fixed_dof is None:
        dof = np.exp(min(max(theta[r + s], _LOG_DOF_LO), _LOG_DOF_HI))
    else:
        dof = fixed_dof
    scale = np.exp(theta[-1])
    return phi, psi, dof, scale


def _neg_loglik(theta, y, r, s, fixed_dof):
    phi, psi, dof, scale = _unpack(theta, r, s, fixed_dof)
    bad = 0.0
    m_phi = min_root_modulus(phi)
    m_psi = min_root_modulus(psi)
    lim = 1.0 + STATIONARITY_MARGIN
    if m_phi <= lim:
        bad += lim - m_phi
    if m_psi <= lim:
        bad += lim - m_psi
    if bad > 0.0:
        return 1e9 * (1.0 + bad)
    T = y.size
    u = y[r:].copy()
    for i in range(r):
        u -= phi[i] * y[r - 1 - i:T - 1 - i]
    if s:
        m = u.size - s
        eps = u[:m]
        eps = eps - psi[0] * u[1:m + 1]
        for j in range(1, s):
            eps -= psi[j] * u[j + 1:m + j + 1]
    else:
        eps = u
    z = eps / scale
    ll = (eps.size * (gammaln((dof + 1.0) / 2.0) - gammaln(dof / 2.0)
                      - 0.5 * np.log(dof * np.pi) - np.log(scale))
          - (dof + 1.0) / 2.0 * np.log1p(z * z / dof).sum())
    return -ll


def _ar_ols(y: np.ndarray, p: int, hold: int):
    """OLS AR(p) with intercept on the common sample t = hold+1 .. T."""
    T = y.size
    target = y[hold:]
    cols = [np.ones(T - hold)]
    cols += [y[hold - k:T - k] for k in range(1, p + 1)]
    X = np.column_stack(cols)
    beta, _, _, _ = np.linalg.lstsq(X, target, rcond=None)
    rss = float(np.sum((target - X @ beta) ** 2))
    return beta, rss, target.size


def select_pseudo_order(series, p_max: int, criterion: str = "bic",
                        allow_zero: bool = False) -> OrderSelection:
    """
    Choose the pseudo AR order by information criterion over a common
    effective sample (the first p_max observations are held out for every
    candidate so the criteria are comparable). Ties go to the smaller p.
    """
    y = as_values(series)
    if y.size <= p_max + 1:
        raise DataError("series too short for the requested p_max")
    crit = criterion.lower()
    if crit not in ("bic", "aic", "hq"):
        raise DataError(f"unknown criterion {criterion!r}")
    p_min = 0 if allow_zero else 1
    values = []
    for p in range(p_min, p_max + 1):
        _, rss, n = _ar_ols(y, p, p_max)
        k = p + 1
        base = n * np.log(max(rss, 1e-300) / n)
        if crit == "bic":
            values.append(base + k * np.log(n))
        elif crit == "aic":
            values.append(base + 2.0 * k)
        else:
            values.append(base + 2.0 * k * np.log(np.log(n)))
    values = np.asarray(values)
    p = p_min + int(np.argmin(values))
    return OrderSelection(p=p, criterion=crit, values=values, p_min=p_min)


def _root_allocation_starts(y: np.ndarray, r: int, s: int) -> list:
    """
    Coefficient starts from the OLS pseudo AR(p) fit: factor its lag
    polynomial and allocate each root subset of size s to the lead part.
    Conjugate pairs must stay together for the coefficients to be real.
    """
    p = r + s
    beta, _, _ = _ar_ols(y, p, p)
    a = beta[1:]
    if p == 1:
        lam = np.array([a[0]])
    else:
        lam = np.roots(np.concatenate([[1.0], -a]))  # inverse roots of the AR poly
    starts = []
    for combo in itertools.combinations(range(p), s):
        lead = lam[list(combo)]
        lagg = lam[[i for i in range(p) if i not in combo]]
        cpsi = -np.poly(lead)[1:] if s else np.empty(0)
        cphi = -np.poly(lagg)[1:] if r else np.empty(0)
        if np.abs(np.imag(cpsi)).max(initial=0) > 1e-8:
            continue
        if np.abs(np.imag(cphi)).max(initial=0) > 1e-8:
            continue
        cphi = np.real(cphi).astype(float)
        cpsi = np.real(cpsi).astype(float)
        # shrink toward zero if the factor is outside the stationary region
        for c in (cphi, cpsi):
            while c.size and min_root_modulus(c) <= 1.0 + 1e-3:
                c *= 0.95
        key = (tuple(np.round(cphi, 6)), tuple(np.round(cpsi, 6)))
        if key not in {k for k, _ in starts}:
            starts.append((key, (cphi, cpsi)))
    return [st for _, st in starts]


def _lattice_starts(r: int, s: int, budget: int) -> list:
    vals = (0.2, -0.2, 0.7, -0.7)
    pts = list(itertools.product(vals, repeat=r + s))
    if len(pts) > budget:
        stride = int(np.ceil(len(pts) / budget))
        pts = pts[::stride][:budget]
    return [(np.array(p[:r]), np.array(p[r:])) for p in pts]


def _robust_scale(x: np.ndarray) -> float:
    med = np.median(x)
    return max(1.4826 * float(np.median(np.abs(x - med))), 1e-8)


def estimate(series, r: int, s: int, dist_kind: str = "student_t",
             starts: int = 8) -> FittedMar:
    """
    Maximum likelihood fit of a MAR(r, s) with the requested error family.

    The cycle is demeaned first and the mean stored as the model intercept.
    Optimisation runs a Nelder-Mead pass from every start (pseudo-AR root
    allocations plus a coarse coefficient lattice), polishes the best
    candidates, and enforces stationarity by penalty. dof is optimised in
    log space within [0.3, 100]; scale in log space.
    """
    y0 = as_values(series)
    T = y0.size
    if T <= r + s + 2:
        raise DataError(f"need T > r + s + 2 (T={T}, r={r}, s={s})")
    if dist_kind not in ("student_t", "cauchy"):
        raise DataError(f"unknown error distribution {dist_kind!r}")
    mean = float(np.mean(y0))
    y = y0 - mean
    fixed_dof = 1.0 if dist_kind == "cauchy" else None

    cand = []
    if r + s > 0:
        cand.extend(_root_allocation_starts(y, r, s))
        cand.extend(_lattice_starts(r, s, starts))
    else:
        cand.append((np.empty(0), np.empty(0)))

    explored = []
    for phi0, psi0 in cand:
        if min_root_modulus(phi0) <= 1.0 + 1e-3 or min_root_modulus(psi0) <= 1.0 + 1e-3:
            continue
        try:
            eps0, _ = pseudo_residual_path(y, r, s, phi0, psi0)
        except DataError:
            continue
        sc0 = _robust_scale(eps0)
        head = [np.log(2.0)] if fixed_dof is None else []
        th0 = np.concatenate([phi0, psi0, head, [np.log(sc0)]])
        res = minimize(_neg_loglik, th0, args=(y, r, s, fixed_dof),
                       method="Nelder-Mead",
                       options=dict(xatol=1e-4, fatol=1e-6,
                                    maxiter=120 * max(1, th0.size), adaptive=False))
        if np.isfinite(res.fun):
            explored.append(res)
    if not explored:
        raise EstimationError(f"all starts failed for MAR({r},{s})")
    explored.sort(key=lambda f: f.fun)

    best = None
    for res in explored[:2]:
        polished = minimize(_neg_loglik, res.x, args=(y, r, s, fixed_dof),
                            method="Nelder-Mead",
                            options=dict(xatol=1e-7, fatol=1e-9,
                                         maxiter=400 * max(1, res.x.size)))
        pick = polished if polished.fun <= res.fun else res
        if best is None or pick.fun < best.fun:
            best = pick

    theta = best.x.copy()
    phi, psi, dof, scale = _unpack(theta, r, s, fixed_dof)
    loglik = -_neg_loglik(theta, y, r, s, fixed_dof)
    if not np.isfinite(loglik):
        raise EstimationError(f"optimum not finite for MAR({r},{s})")

    model = MarModel(phi=phi.copy(), psi=psi.copy(),
                     dist=ErrorDist(dist_kind if dist_kind == "cauchy" else "student_t",
                                    float(dof), float(scale)),
                     intercept=mean)
    eps, u = pseudo_residual_path(y, r, s, phi, psi)
    se, se_note = _std_errors(y, r, s, phi, psi, dof, scale, fixed_dof)
    diag = {"starts_used": len(explored), "neg_loglik_calls": int(best.nfev)}
    if se_note:
        diag["std_errors"] = se_note
    return FittedMar(model=model, loglik=float(loglik), std_errors=se,
                     residuals=eps, u_path=u, p_used=r + s,
                     sample_length=T, diagnostics=diag)


def _neg_loglik_natural(params, y, r, s, fixed_dof):
    phi = params[:r]
    psi = params[r:r + s]
    if fixed_dof is None:
        dof, scale = params[r + s], params[r + s + 1]
    else:
        dof, scale = fixed_dof, params[r + s]
    if dof <= 0 or scale <= 0:
        return np.inf
    theta = np.concatenate([phi, psi,
                            [] if fixed_dof is not None else [np.log(dof)],
                            [np.log(scale)]])
    return _neg_loglik(theta, y, r, s, fixed_dof)


def _std_errors(y, r, s, phi, psi, dof, scale, fixed_dof):
    """Inverse numerical Hessian at the optimum, in natural units."""
    if fixed_dof is None:
        params = np.concatenate([phi, psi, [dof, scale]])
    else:
        params = np.concatenate([phi, psi, [scale]])
    k = params.size
    h = 1e-4 * np.maximum(np.abs(params), 0.1)
    H = np.zeros((k, k))
    f0 = _neg_loglik_natural(params, y, r, s, fixed_dof)

    def f(v):
        return _neg_loglik_natural(v, y, r, s, fixed_dof)

    try:
        for i in range(k):
            ei = np.zeros(k); ei[i] = h[i]
            H[i, i] = (f(params + ei) - 2.0 * f0 + f(params - ei)) / h[i] ** 2
            for j in range(i + 1, k):
                ej = np.zeros(k); ej[j] = h[j]
                H[i, j] = H[j, i] = (f(params + ei + ej) - f(params + ei - ej)
                                     - f(params - ei + ej) + f(params - ei - ej)
                                     ) / (4.0 * h[i] * h[j])
        cov = np.linalg.inv(H)
        var = np.diag(cov)
        if np.any(var <= 0) or not np.all(np.isfinite(var)):
            return None, "hessian not positive definite"
        se = np.sqrt(var)
    except np.linalg.LinAlgError:
        return None, "hessian singular"
    if fixed_dof is not None:
        se = np.concatenate([se[:r + s], [np.nan], se[r + s:]])
    return se, ""


def identify(series, p_max: int = 4, dist_kind: str = "student_t",
             criterion: str = "bic", starts: int = 8,
             allow_zero: bool = True) -> FittedMar:
    """
    Two-stage identification: pseudo AR order p by information criterion,
    then the best-likelihood (r, s) split with r + s = p. Likelihood ties
    break toward the larger lead order, recorded in the diagnostics.
    p = 0 yields the white-noise MAR(0,0) fit of the distribution alone.
    """
    y = as_values(series)
    sel = select_pseudo_order(y, p_max, criterion, allow_zero=allow_zero)
    p = sel.p
    if p == 0:
        fit = estimate(y, 0, 0, dist_kind, starts)
        fit.p_used = 0
        fit.diagnostics["criterion"] = sel.criterion
        return fit
    best = None
    tie = False
    for s in range(p + 1):
        r = p - s
        fit = estimate(y, r, s, dist_kind, starts)
        if best is None:
            best = fit
            continue
        gap = fit.loglik - best.loglik
        if abs(gap) <= 1e-9 * max(1.0, abs(best.loglik)):
            tie = True
            best = fit          # equal likelihood: prefer the larger s
        elif gap > 0:
            best = fit
    best.p_used = p
    best.diagnostics["criterion"] = sel.criterion
    if tie:
        best.diagnostics["loglik_tie"] = True
    return best


def fitted_from_model(model: MarModel, series) -> FittedMar:
    """
    Wrap known parameters and a sample into a FittedMar (frozen-parameter
    evaluation: residual paths and likelihood are recomputed, nothing is
    estimated). The model intercept is used as the centring constant.
    """
    y = as_values(series) - model.intercept
    eps, u = pseudo_residual_path(y, model.r, model.s, model.phi, model.psi)
    ll = float(model.dist.logpdf(eps).sum())
    return FittedMar(model=model, loglik=ll, std_errors=None,
                     residuals=eps, u_path=u, p_used=model.r + model.s,
                     sample_length=y.size, diagnostics={"frozen": True})
