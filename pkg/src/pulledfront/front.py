"""Construction of the critical front profile.

The front (U, V) travels at the linear spreading speed and satisfies

    U'' + c U' + U(1 - U - a V) = 0
    sigma V'' + c V' + r V(1 - b U - V) = 0

on the line with (U, V) -> (1, 0) at -infinity and (0, 1) at +infinity.
Ahead of the front the decay is degenerate, U ~ beta * xi * exp(-gamma xi)
with gamma = c/2, which a plain Dirichlet truncation represents poorly; the
+L closure used here is a Robin condition exact for the shifted profile
beta*(xi + s)*exp(-gamma xi) with the shift s kept as an unknown.
"""

import hashlib
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.optimize import least_squares
from scipy.special import expit
from scipy.sparse.linalg import spsolve

from .model import ModelParameters, derive_constants

SCHEMA = "pulledfront/front-profile/1"


class FrontError(RuntimeError):
    pass


class NoConvergence(FrontError):
    pass


class NotMonotone(FrontError):
    """Converged to a non-front (oscillatory or spurious) solution."""


class TruncationDominant(FrontError):
    """Domain too short: boundary truncation error exceeds the solver
    tolerance budget."""


class Blowup(FrontError):
    pass


class NotSettled(FrontError):
    """Relaxation did not reach a steady front within the allotted time."""


class WindowTooNoisy(FrontError):
    pass


class HashMismatch(FrontError):
    pass


class SchemaVersionUnknown(FrontError):
    pass


@dataclass(frozen=True)
class MinusInfinityCase:
    """Leading-order behavior of (1-U, V) as xi -> -infinity.

    name is one of 'UFaster' (the two components decay with their own
    rates), 'VFaster' (the slower v-rate drags both components), or
    'Resonant' (equal rates, xi-corrected decay in the u-component).
    rate_u and rate_v are the exponential rates of 1-U and V; u_has_linear
    marks the resonant xi*exp factor in 1-U.
    """
    name: str
    mu_u: float
    mu_v: float
    rate_u: float
    rate_v: float
    leading_vector: tuple
    u_has_linear: bool


def minus_infinity_case(params, dc=None):
    # classification needs only gamma = sqrt(1-a); skip full validation so
    # the comparison is usable for parameter exploration as well
    g = dc.gamma_star if dc is not None else math.sqrt(1.0 - params.a)
    sig, r, b, a = params.sigma, params.r, params.b, params.a
    mu_u = -g + math.sqrt(g * g + 1.0)
    mu_v = (-g + math.sqrt(g * g + sig * r * (b - 1.0))) / sig
    if abs(mu_u - mu_v) <= 1e-12 * max(mu_u, mu_v):
        mu = 0.5 * (mu_u + mu_v)
        vec = (-1.0, 2.0 * math.sqrt(g * g + 1.0) / a)
        return MinusInfinityCase("Resonant", mu_u, mu_v, mu, mu, vec, True)
    if mu_u < mu_v:
        # each component decays at its own rate, amplitudes independent
        return MinusInfinityCase("UFaster", mu_u, mu_v, mu_u, mu_v,
                                 (1.0, 1.0), False)
    # slower v-rate forces itself on the u-component through the coupling
    d_u = mu_v * mu_v + 2.0 * g * mu_v - 1.0
    return MinusInfinityCase("VFaster", mu_u, mu_v, mu_v, mu_v,
                             (-a / d_u, 1.0), False)


@dataclass
class FrontProfile:
    params: ModelParameters
    delta: float
    L: float
    n: int
    U: np.ndarray
    V: np.ndarray
    dU: np.ndarray
    dV: np.ndarray
    beta_plus: float
    case_minus: str
    shift: float
    residual: float
    iterations: int

    @property
    def grid(self):
        return np.linspace(-self.L, self.L, self.n + 1)

    def interpolants(self):
        xi = self.grid
        return CubicSpline(xi, self.U), CubicSpline(xi, self.V)


def _central_derivative(arr, h):
    out = np.empty_like(arr)
    out[1:-1] = (arr[2:] - arr[:-2]) / (2.0 * h)
    out[0] = (-3.0 * arr[0] + 4.0 * arr[1] - arr[2]) / (2.0 * h)
    out[-1] = (3.0 * arr[-1] - 4.0 * arr[-2] + arr[-3]) / (2.0 * h)
    return out


def _truncation_estimate(gamma_star, case, L):
    # the Robin/rate closures absorb the leading exponentials exactly, so
    # the boundary error is set by the first neglected correction terms
    right = math.exp(-2.0 * gamma_star * L)
    rate_min = min(case.rate_u, case.rate_v)
    rate_max = max(case.mu_u, case.mu_v)
    left = math.exp(-2.0 * rate_min * L) + math.exp(-rate_max * L)
    return right + left


def _front_residual_and_jacobian(z, params, c, gamma, rate_u, rate_v, L, h,
                                 n, mid):
    a, b, sig, r = params.a, params.b, params.sigma, params.r
    U = z[:n + 1]
    V = z[n + 1:2 * n + 2]
    s = z[2 * n + 2]
    den = L + 1.0 / gamma + s

    F = np.zeros(2 * n + 3)
    Ui, Vi = U[1:-1], V[1:-1]
    F[1:n] = ((U[2:] - 2.0 * Ui + U[:-2]) / h ** 2
              + c * (U[2:] - U[:-2]) / (2.0 * h)
              + Ui * (1.0 - Ui - a * Vi))
    F[n + 2:2 * n + 1] = (sig * (V[2:] - 2.0 * Vi + V[:-2]) / h ** 2
                          + c * (V[2:] - V[:-2]) / (2.0 * h)
                          + r * Vi * (1.0 - b * Ui - Vi))
    dU_left = (-3.0 * U[0] + 4.0 * U[1] - U[2]) / (2.0 * h)
    dV_left = (-3.0 * V[0] + 4.0 * V[1] - V[2]) / (2.0 * h)
    F[0] = dU_left + rate_u * (1.0 - U[0])
    F[n + 1] = dV_left - rate_v * V[0]
    dU_right = (3.0 * U[-1] - 4.0 * U[-2] + U[-3]) / (2.0 * h)
    gU = dU_right + gamma * U[-1]
    # rescale by exp(gamma L): the raw row is O(exp(-gamma L)) and would
    # leave the shift column numerically zero
    scale = math.exp(gamma * L)
    F[n] = (gU * den - U[-1]) * scale
    # V-1 at +L sits below representable precision relative to 1, so a Robin
    # row there is round-off noise; slave it to U through the leading-order
    # component ratio instead
    d_v = (sig - 2.0) * gamma * gamma - r
    ratio = r * b / d_v
    F[2 * n + 1] = (V[-1] - 1.0) - ratio * U[-1]
    F[2 * n + 2] = U[mid] - 0.5

    rows, cols, vals = [], [], []

    def add(i, j, v):
        rows.append(i)
        cols.append(j)
        vals.append(v)

    idx = np.arange(1, n)
    lower = 1.0 / h ** 2 - c / (2.0 * h)
    upper = 1.0 / h ** 2 + c / (2.0 * h)
    rows.extend(idx); cols.extend(idx - 1); vals.extend(np.full(n - 1, lower))
    rows.extend(idx); cols.extend(idx + 1); vals.extend(np.full(n - 1, upper))
    rows.extend(idx); cols.extend(idx)
    vals.extend(-2.0 / h ** 2 + 1.0 - 2.0 * Ui - a * Vi)
    rows.extend(idx); cols.extend(n + 1 + idx); vals.extend(-a * Ui)

    ov = n + 1
    lower_v = sig / h ** 2 - c / (2.0 * h)
    upper_v = sig / h ** 2 + c / (2.0 * h)
    rows.extend(ov + idx); cols.extend(ov + idx - 1)
    vals.extend(np.full(n - 1, lower_v))
    rows.extend(ov + idx); cols.extend(ov + idx + 1)
    vals.extend(np.full(n - 1, upper_v))
    rows.extend(ov + idx); cols.extend(ov + idx)
    vals.extend(-2.0 * sig / h ** 2 + r * (1.0 - b * Ui - 2.0 * Vi))
    rows.extend(ov + idx); cols.extend(idx); vals.extend(-r * b * Vi)

    add(0, 0, -3.0 / (2.0 * h) - rate_u)
    add(0, 1, 2.0 / h)
    add(0, 2, -1.0 / (2.0 * h))
    add(n + 1, ov + 0, -3.0 / (2.0 * h) - rate_v)
    add(n + 1, ov + 1, 2.0 / h)
    add(n + 1, ov + 2, -1.0 / (2.0 * h))

    add(n, n, ((3.0 / (2.0 * h) + gamma) * den - 1.0) * scale)
    add(n, n - 1, -2.0 / h * den * scale)
    add(n, n - 2, 1.0 / (2.0 * h) * den * scale)
    add(n, 2 * n + 2, gU * scale)
    add(2 * n + 1, ov + n, 1.0)
    add(2 * n + 1, n, -ratio)
    add(2 * n + 2, mid, 1.0)

    J = sparse.coo_matrix((vals, (rows, cols)),
                          shape=(2 * n + 3, 2 * n + 3)).tocsr()
    return F, J


def tanh_guess(xi, gamma_star):
    # (1 - tanh(gamma xi / 2))/2 written as a logistic so the tail does not
    # underflow; the (1 + gamma xi) factor seeds the degenerate decay ahead
    # of the front, keeping the Robin closure rows away from zero
    U = expit(-gamma_star * xi) * (1.0 + gamma_star * np.maximum(xi, 0.0))
    return np.minimum(U, 1.0), 1.0 - np.minimum(U, 1.0)


def solve_front(params, dc, L=80.0, n=8000, tol=1e-10, max_iter=40,
                initial=None):
    """Newton-collocation solve of the critical front on [-L, L].

    Second-order central differences at interior nodes.  At -L the two
    components satisfy rate conditions from the leading exponentials of the
    connection to (1,0); at +L a Robin closure with a shared shift unknown s
    encodes the degenerate (xi+s)exp(-gamma xi) decay.  Translation is pinned
    by U(0) = 1/2, which the freed shift keeps square.
    """
    if n % 2 != 0:
        raise ValueError("n must be even so that xi=0 is a node")
    c, gamma = dc.c_star, dc.gamma_star
    case = minus_infinity_case(params, dc)
    if _truncation_estimate(gamma, case, L) > max(1e3 * tol, 1e-7):
        raise TruncationDominant(
            "estimated boundary truncation error %.2e exceeds budget at L=%g"
            % (_truncation_estimate(gamma, case, L), L))
    rate_u = case.rate_u - (1.0 / L if case.u_has_linear else 0.0)
    rate_v = case.rate_v

    xi = np.linspace(-L, L, n + 1)
    h = xi[1] - xi[0]
    mid = n // 2
    if initial is None:
        U0, V0 = tanh_guess(xi, gamma)
    else:
        U0, V0 = initial
    z = np.concatenate([U0, V0, [0.0]])

    fnorm_prev = np.inf
    for it in range(1, max_iter + 1):
        F, J = _front_residual_and_jacobian(z, params, c, gamma, rate_u,
                                            rate_v, L, h, n, mid)
        fnorm = np.max(np.abs(F))
        if not math.isfinite(fnorm):
            raise NoConvergence("non-finite residual at iteration %d" % it)
        if fnorm < tol:
            break
        dz = spsolve(J, -F)
        # damped update: halve the step until the residual stops increasing
        lam = 1.0
        for _ in range(30):
            z_try = z + lam * dz
            F_try, _ = _front_residual_and_jacobian(
                z_try, params, c, gamma, rate_u, rate_v, L, h, n, mid)
            if np.max(np.abs(F_try)) < max(fnorm, fnorm_prev):
                break
            lam *= 0.5
        else:
            raise NoConvergence("line search failed at iteration %d" % it)
        z = z_try
        fnorm_prev = fnorm
    else:
        raise NoConvergence(
            "residual %.2e after %d iterations" % (fnorm, max_iter))

    U = z[:n + 1]
    V = z[n + 1:2 * n + 2]
    s = z[2 * n + 2]
    dU = _central_derivative(U, h)
    dV = _central_derivative(V, h)
    interior = slice(1, n)
    # components saturate to 0 or 1 within machine epsilon near the ends;
    # slopes there are pure round-off and exempt from the strict sign check
    sat_u = np.minimum(U, 1.0 - U)[interior] <= 1e-13
    sat_v = np.minimum(V, 1.0 - V)[interior] <= 1e-13
    mono_u = (dU[interior] < 0.0) | (sat_u & (np.abs(dU[interior]) <= 1e-13))
    mono_v = (dV[interior] > 0.0) | (sat_v & (np.abs(dV[interior]) <= 1e-13))
    if not (np.all(mono_u) and np.all(mono_v)):
        raise NotMonotone("converged solution is not a monotone front")
    box = ((U[interior] > 0.0) & (U[interior] < 1.0) | sat_u) \
        & ((V[interior] > 0.0) & (V[interior] < 1.0) | sat_v) \
        & (U[interior] > -1e-13) & (U[interior] < 1.0 + 1e-13) \
        & (V[interior] > -1e-13) & (V[interior] < 1.0 + 1e-13)
    if not np.all(box):
        raise NotMonotone("converged solution leaves the unit box")

    beta = U[-1] * math.exp(gamma * L) / (L + 1.0 / gamma + s)
    return FrontProfile(params=params, delta=dc.delta if dc.delta else 0.0,
                        L=L, n=n, U=U, V=V, dU=dU, dV=dV, beta_plus=beta,
                        case_minus=case.name, shift=s, residual=fnorm,
                        iterations=it)


def _repin(xi, u, v, spline_u=None):
    """Translate the pair so that u crosses 1/2 at xi=0; cubic resampling."""
    crossings = np.nonzero((u[:-1] - 0.5) * (u[1:] - 0.5) < 0.0)[0]
    if len(crossings) == 0:
        return None
    i = crossings[0]
    # linear estimate of the crossing, refined by the cubic interpolant
    x0 = xi[i] + (0.5 - u[i]) / (u[i + 1] - u[i]) * (xi[i + 1] - xi[i])
    su = CubicSpline(xi, u)
    sv = CubicSpline(xi, v)
    for _ in range(3):
        du = su(x0, 1)
        if du == 0.0:
            break
        x0 -= (su(x0) - 0.5) / du
    xq = xi + x0
    u_new = np.where(xq < xi[0], 1.0, np.where(xq > xi[-1], 0.0, su(xq)))
    v_new = np.where(xq < xi[0], 0.0, np.where(xq > xi[-1], 1.0, sv(xq)))
    return np.clip(u_new, 0.0, 1.0), np.clip(v_new, 0.0, 1.0), x0


def relax_to_front(params, dc, L=80.0, n=8000, T=2000.0, dt=None,
                   settle_tol=1e-5, initial=None, repin_every=10.0):
    """Independent construction of the front by parabolic relaxation.

    Integrates the comoving system from the tanh guess; the front is an
    attracting steady state, and a translation re-pinning keeps U(0)=1/2.
    Serves as the cross-validation oracle for solve_front.  Convergence is
    algebraic (the comoving linearization has marginal essential spectrum),
    roughly residual ~ 1e-2/T from the tanh guess.
    """
    from .simulate import _ComovingStepper, steady_residual

    xi = np.linspace(-L, L, n + 1)
    h_grid = xi[1] - xi[0]
    if initial is None:
        u, v = tanh_guess(xi, dc.gamma_star)
    else:
        u = np.array(initial[0], dtype=float)
        v = np.array(initial[1], dtype=float)
    if dt is None:
        dt = 0.2 * min(1.0, 1.0 / params.r)
    stepper = _ComovingStepper(params, dc.c_star, n + 1, h_grid, dt,
                               bc="front", L=L)
    den_cur = L + 1.0 / dc.gamma_star
    t = 0.0
    next_repin = repin_every
    residual = np.inf
    while t < T - 0.5 * dt:
        u, v = stepper.advance(u, v)
        t += dt
        if not (np.all(np.isfinite(u)) and np.max(u) < 2.0
                and np.max(v) < 2.0):
            raise Blowup("state left the invariant region at t=%g" % t)
        if t >= next_repin - 0.5 * dt:
            pinned = _repin(xi, u, v)
            if pinned is None:
                raise NotSettled(
                    "no 1/2-crossing of u at t=%g; no front is forming" % t)
            u, v, _ = pinned
            u[0], v[0] = 1.0, 0.0
            next_repin += repin_every
            residual = steady_residual(xi, u, v, params, dc.c_star)
            # re-estimate the Robin denominator from the current tail; a
            # stale offset leaves a slow residual translation drift
            g = dc.gamma_star
            du_end = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h_grid)
            flux = du_end + g * u[-1]
            if flux > 0.0:
                den_est = min(max(u[-1] / flux, 0.5 * L), 3.0 * L)
                if abs(den_est - den_cur) > 1e-3 * den_cur:
                    stepper = _ComovingStepper(params, dc.c_star, n + 1,
                                               h_grid, dt, bc="front", L=L,
                                               robin_den=den_est)
                    den_cur = den_est
            if residual < 0.1 * settle_tol:
                break
    if residual > settle_tol:
        raise NotSettled("steady residual %.2e above %.0e after T=%g"
                         % (residual, settle_tol, T))
    case = minus_infinity_case(params, dc)
    beta = u[-1] * math.exp(dc.gamma_star * L) / (L + 1.0 / dc.gamma_star)
    return FrontProfile(params=params, delta=dc.delta if dc.delta else 0.0,
                        L=L, n=n, U=u, V=v, dU=_central_derivative(u, h_grid),
                        dV=_central_derivative(v, h_grid), beta_plus=beta,
                        case_minus=case.name, shift=0.0, residual=residual,
                        iterations=int(round(t / dt)))


@dataclass
class DecayFitPlus:
    gamma_fit: float
    beta_fit: float
    ratio: float
    ratio_expected: float
    logxi_misfit: bool
    fit_rms: float


def front_decay_rate_plus(profile, window=None):
    """Fit the degenerate decay U ~ beta*xi*exp(-gamma xi) ahead of the front.

    Least squares on log U - log xi over [L/2, L-5], weighted by U so the fit
    is effectively in linear space and the near-boundary tail (where U sits
    at round-off level) carries no weight.  A secondary fit with a log(xi)
    term flags inputs lacking the linear prefactor.
    """
    L = profile.L
    if window is None:
        window = (0.5 * L, L - 5.0)
    xi = profile.grid
    mask = (xi >= window[0]) & (xi <= window[1]) & (profile.U > 0.0)
    x = xi[mask]
    u = profile.U[mask]
    if len(x) < 10:
        raise WindowTooNoisy("only %d usable nodes in the fit window"
                             % len(x))
    y = np.log(u)
    w = u / np.max(u)

    # model log U = log(beta) + log(xi + x0) - g*xi; the offset x0 accounts
    # for the translation of the pinned front.  For inputs without the
    # linear prefactor the optimizer pushes x0 to large values, which is
    # the misfit signal.
    def resid(p):
        logb, x0, g = p
        return w * (logb + np.log(x + x0) - g * x - y)

    x_lo = float(x[0])
    g0 = -np.polyfit(x, y - np.log(x), 1, w=w)[0]
    logb0 = float(np.average(y - np.log(x) + g0 * x, weights=w))
    start = np.array([logb0, 0.0, g0])
    sol = least_squares(resid, start,
                        bounds=([-np.inf, -0.9 * x_lo, 0.0],
                                [np.inf, 1e6, np.inf]),
                        xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        x_scale=[1.0, 10.0, 0.1])
    logb, x0, gamma_fit = sol.x
    beta_fit = math.exp(logb)
    fit_rms = float(np.sqrt(np.mean(sol.fun ** 2)))
    if fit_rms > 1e-3:
        raise WindowTooNoisy("weighted fit rms %.2e" % fit_rms)

    params = profile.params
    g = math.sqrt(1.0 - params.a)  # gamma = c/2 = sqrt(1-a)
    d_v = (params.sigma - 2.0) * g * g - params.r
    ratio_expected = params.r * params.b / d_v
    iref = int(np.argmin(np.abs(xi - 0.5 * L)))
    ratio = (profile.V[iref] - 1.0) / profile.U[iref]
    return DecayFitPlus(gamma_fit=gamma_fit, beta_fit=beta_fit, ratio=ratio,
                        ratio_expected=ratio_expected,
                        logxi_misfit=abs(x0) > 0.5 * x_lo, fit_rms=fit_rms)


def _profile_payload(profile):
    fmt = lambda arr: [format(float(x), ".17g") for x in arr]
    p = profile.params
    return {
        "schema": SCHEMA,
        "params": {"a": format(p.a, ".17g"), "b": format(p.b, ".17g"),
                   "sigma": format(p.sigma, ".17g"),
                   "r": format(p.r, ".17g")},
        "delta": format(profile.delta, ".17g"),
        "L": format(profile.L, ".17g"),
        "n": profile.n,
        "beta_plus": format(profile.beta_plus, ".17g"),
        "case_minus": profile.case_minus,
        "shift": format(profile.shift, ".17g"),
        "residual": format(profile.residual, ".17g"),
        "iterations": profile.iterations,
        "arrays": {"U": fmt(profile.U), "V": fmt(profile.V),
                   "dU": fmt(profile.dU), "dV": fmt(profile.dV)},
    }


def profile_hash(profile):
    payload = _profile_payload(profile)
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def save_profile(profile, path):
    payload = _profile_payload(profile)
    payload["hash"] = profile_hash(profile)
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_profile(path, params=None):
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except (json.JSONDecodeError, OSError) as exc:
        raise SchemaVersionUnknown("unreadable profile file: %s" % exc)
    if payload.get("schema") != SCHEMA:
        raise SchemaVersionUnknown(
            "unrecognized schema %r" % payload.get("schema"))
    stored_hash = payload.pop("hash", None)
    blob = json.dumps(payload, sort_keys=True).encode()
    if stored_hash != hashlib.sha256(blob).hexdigest():
        raise HashMismatch("profile content hash does not match")
    pp = payload["params"]
    file_params = ModelParameters(a=float(pp["a"]), b=float(pp["b"]),
                                  sigma=float(pp["sigma"]),
                                  r=float(pp["r"]))
    if params is not None and params != file_params:
        warnings.warn("profile parameters differ from the requested "
                      "configuration; the stored profile wins")
    arrs = {k: np.array([float(s) for s in v])
            for k, v in payload["arrays"].items()}
    return FrontProfile(params=file_params, delta=float(payload["delta"]),
                        L=float(payload["L"]), n=int(payload["n"]),
                        U=arrs["U"], V=arrs["V"], dU=arrs["dU"],
                        dV=arrs["dV"],
                        beta_plus=float(payload["beta_plus"]),
                        case_minus=payload["case_minus"],
                        shift=float(payload["shift"]),
                        residual=float(payload["residual"]),
                        iterations=int(payload["iterations"]))
