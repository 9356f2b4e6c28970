"""Evans function of the weighted linearization and the absence of unstable
point spectrum.

The Evans function W(lam) is the Wronskian determinant at x = 0 of the two
solutions decaying at +inf against the two decaying at -inf; its zeros right
of the essential spectrum are exactly the eigenvalues.  Two routes compute
it: the determinant of the directly constructed solution basis, and the
pairing of the two rate-normalized 2-form flows (robust on large contours
where individual solutions overflow).  A winding-number computation over the
boundary of the spectral sector, an extrapolation to lam = 0 through
mu = sqrt(lam), and an independent finite-difference eigenvalue solve
together certify that no unstable eigenvalues exist.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigs

from .model import SpectralPoint
from .odesys import integrate_two_forms, solution_basis, wedge_pairing


class EvansError(RuntimeError):
    pass


class PhaseJump(EvansError):
    """Phase step >= pi/2 persisted through bisection refinement."""


class NearZeroOnContour(EvansError):
    """|W| fell below the floor on the contour; reposition the contour."""


@dataclass
class EvansSample:
    """One Evans-function evaluation.

    value carries the renormalized (O(1)) Wronskian; log_scale is the real
    part of the exponential bookkeeping factored out during transport, so
    the raw determinant of unit-normalized data at the truncation points
    is value * exp(log_scale).  Only zero/nonzero and phase are
    contract-bearing; the magnitude is normalization-dependent.
    """

    point: SpectralPoint
    value: complex
    log_scale: float
    method: str


def evans(lam, field, method="TwoForm", rtol=1e-10, threshold=1e-12):
    """Evans function W(lam) at x = 0.

    method "DirectBasis" forms the 4x4 determinant of the constructed
    decaying solutions; "TwoForm" pairs the two 6-dimensional flows.  The
    two agree because the exponential prefactors cancel in the pairing.
    """
    point = lam if isinstance(lam, SpectralPoint) else SpectralPoint(lam)
    if method == "DirectBasis":
        basis = solution_basis(field, point)
        value = np.linalg.det(basis.matrix_at_zero())
        return EvansSample(point=point, value=complex(value), log_scale=0.0,
                           method="DirectBasis")
    if method != "TwoForm":
        raise ValueError("unknown method %r" % method)
    tf = integrate_two_forms(field, point, rtol=rtol, threshold=threshold)
    value = wedge_pairing(tf.y_plus0, tf.y_minus0)
    log_scale = (-tf.rate_plus * tf.X_plus
                 + tf.rate_minus * tf.X_minus).real
    return EvansSample(point=point, value=complex(value),
                       log_scale=float(log_scale), method="TwoForm")


@dataclass
class OriginLimit:
    """Extrapolation of W to lam = 0 along mu = sqrt(lam) -> 0."""

    mus: tuple
    values: tuple
    limit: complex


def evans_origin(field, mus=(0.1, 0.05, 0.025), method="TwoForm"):
    """W at the branch point by polynomial extrapolation in mu.

    W is analytic in mu near 0, so samples at a few small mu determine the
    limit to O(mu^len(mus)); a nonzero limit rules out an eigenvalue at the
    origin.
    """
    mus = tuple(float(m) for m in mus)
    values = tuple(evans(SpectralPoint.from_root(m), field,
                         method=method).value for m in mus)
    coeffs = np.polyfit(np.asarray(mus, dtype=complex),
                        np.asarray(values, dtype=complex), len(mus) - 1)
    return OriginLimit(mus=mus, values=values, limit=complex(coeffs[-1]))


def sector_contour(dc, M_l=None, rho_cut=None,
                   n_arc=160, n_ray=60, n_line=24, n_semi=32):
    """Counterclockwise boundary of the spectral sector cut at radius M_l,
    indented around the negative real axis at distance rho_cut.

    The sector is Re(lam) >= -delta0 - delta1*|Im(lam)|; the indentation
    keeps the path off the branch cut: in along the upper ray, right along
    Im = +rho, around the origin through +rho, back along Im = -rho, and
    out along the lower ray to the closing arc.
    """
    if M_l is None:
        M_l = dc.M_l
    if rho_cut is None:
        rho_cut = dc.M_s / 10.0
    d0, d1, rho = dc.delta0, dc.delta1, rho_cut
    z0p = -d0 - d1 * rho + 1j * rho   # upper ray enters the strip here
    direction = -d1 + 1j              # up-left along the sector boundary
    # outer end of the upper ray on |lam| = M_l
    a2 = abs(direction) ** 2
    a1 = 2.0 * (z0p * direction.conjugate()).real
    a0 = abs(z0p) ** 2 - M_l ** 2
    t_hi = (-a1 + math.sqrt(a1 * a1 - 4.0 * a2 * a0)) / (2.0 * a2)
    # geometric spacing toward the inner end resolves the fast phase there
    t = np.concatenate(([0.0], np.geomspace(1e-3 * t_hi, t_hi, n_ray)))
    upper_ray = z0p + t * direction
    th_hi = cmath.phase(upper_ray[-1])
    arc = M_l * np.exp(1j * np.linspace(-th_hi, th_hi, n_arc))
    upper_line = np.linspace(z0p, 1j * rho, n_line, endpoint=False)
    semi = rho * np.exp(1j * np.linspace(0.5 * np.pi, -0.5 * np.pi, n_semi))
    z0m = z0p.conjugate()
    lower_line = np.linspace(-1j * rho, z0m, n_line, endpoint=False)[1:]
    lower_ray = z0m + t * direction.conjugate()
    return np.concatenate([arc[:-1], upper_ray[::-1][:-1], upper_line,
                           semi, lower_line, lower_ray[:-1]])


def winding_number(field, contour, evaluator=None, floor=1e-8,
                   max_depth=14):
    """Argument-principle winding of W over a closed contour.

    Successive phase increments are kept below pi/2 by adaptive bisection
    of offending segments (PhaseJump if a jump survives max_depth splits);
    samples with |W| below floor relative to the contour median raise
    NearZeroOnContour.  Returns the integer winding; 0 certifies the
    absence of zeros inside the contour.
    """
    if evaluator is None:
        def evaluator(z):
            return evans(z, field, method="TwoForm", rtol=1e-6,
                         threshold=1e-5).value

    contour = np.asarray(contour, dtype=complex)
    vals = np.array([evaluator(z) for z in contour])
    floor_abs = floor * float(np.median(np.abs(vals)))
    if np.abs(vals).min() < floor_abs:
        raise NearZeroOnContour(
            "|W| below floor %.3e on the contour" % floor_abs)

    def check(v):
        if abs(v) < floor_abs:
            raise NearZeroOnContour(
                "|W| below floor %.3e during refinement" % floor_abs)
        return v

    def seg(z1, v1, z2, v2, depth):
        dphi = cmath.phase(v2 / v1)
        if abs(dphi) < 0.5 * math.pi:
            return dphi
        if depth >= max_depth:
            raise PhaseJump(
                "phase step %.3f at lam=%s persists after %d splits"
                % (dphi, 0.5 * (z1 + z2), depth))
        zm = 0.5 * (z1 + z2)
        vm = check(evaluator(zm))
        return seg(z1, v1, zm, vm, depth + 1) \
            + seg(zm, vm, z2, v2, depth + 1)

    total = 0.0
    for k in range(len(contour)):
        k2 = (k + 1) % len(contour)
        total += seg(contour[k], vals[k], contour[k2], vals[k2], 0)
    w = total / (2.0 * math.pi)
    if abs(w - round(w)) > 1e-3:
        raise PhaseJump("winding %.6f is not an integer" % w)
    return int(round(w))


def _discrete_blocks(params, dc, profile, weight, L, n, weighted=True,
                     bc="dirichlet", limit_side=None):
    """Sparse finite-difference matrix of the weighted linearization on
    [-L, L]; unknowns are the values of (p, q) stacked.

    Dirichlet truncation (interior nodes) is the faithful approximation of
    the operator on the line: its eigenvalues converge to the point
    spectrum plus the absolute spectrum.  Periodic truncation instead
    recovers the essential-spectrum curves of the limiting operators; it
    exists for the unweighted sanity check only.
    """
    h = 2.0 * L / n
    if bc == "periodic":
        x = -L + h * np.arange(n)
    else:
        x = -L + h * np.arange(1, n)
    if limit_side is None:
        U_i, V_i = profile.interpolants()
        xc = np.clip(x, -profile.L, profile.L)
        U = np.where(x < -profile.L, 1.0,
                     np.where(x > profile.L, 0.0, U_i(xc)))
        V = np.where(x < -profile.L, 0.0,
                     np.where(x > profile.L, 1.0, V_i(xc)))
    elif limit_side > 0:
        U, V = np.zeros_like(x), np.ones_like(x)
    else:
        U, V = np.ones_like(x), np.zeros_like(x)
    if weighted:
        slope = weight.slope_ratio(x)
        curve = weight.curvature_ratio(x)
    else:
        slope = np.zeros_like(x)
        curve = np.zeros_like(x)
    p = params
    c = dc.c_star
    zeta_u = 1.0 + c * slope + curve - 2.0 * U - p.a * V
    zeta_v = p.r * (1.0 - p.b * U - 2.0 * V) + c * slope + p.sigma * curve

    m = len(x)
    e = np.ones(m)
    D2 = sp.diags([e[1:], -2.0 * e, e[1:]], [-1, 0, 1], format="lil")
    D1 = sp.diags([-e[1:], e[1:]], [-1, 1], format="lil")
    if bc == "periodic":
        D2[0, -1] = D2[-1, 0] = 1.0
        D1[0, -1], D1[-1, 0] = -1.0, 1.0
    D2 = (D2 / h ** 2).tocsr()
    D1 = (D1 / (2.0 * h)).tocsr()
    I = sp.eye(m)

    L_u = D2 + sp.diags(c + 2.0 * slope) @ D1 + sp.diags(zeta_u)
    L_v = p.sigma * D2 + sp.diags(c + 2.0 * p.sigma * slope) @ D1 \
        + sp.diags(zeta_v)
    C_uv = sp.diags(-p.a * U)
    C_vu = sp.diags(-p.r * p.b * V)
    return sp.bmat([[L_u, C_uv], [C_vu, L_v]], format="csc"), I


def discrete_spectrum_oracle(params, weight, profile, L, n, dc=None,
                             k=60, sigma=0.0, weighted=True,
                             re_floor=None, bc="dirichlet",
                             limit_side=None):
    """Eigenvalues of the truncated finite-difference linearization near a
    shift, filtered to the half-plane window Re >= re_floor.

    This is an independent check on the Evans certificate: with the weight
    in place no returned eigenvalue may have nonnegative real part.  With
    weighted=False the unstable essential spectrum of the +inf limit shows
    up as approximants with real part up to about 1 - a.
    """
    if dc is None:
        from .model import derive_constants
        dc = derive_constants(params, delta=weight.delta)
    if re_floor is None:
        re_floor = -0.5 * abs(dc.iota)
    M, _ = _discrete_blocks(params, dc, profile, weight, L, n,
                            weighted=weighted, bc=bc,
                            limit_side=limit_side)
    vals = eigs(M, k=k, sigma=sigma, which="LM",
                return_eigenvectors=False)
    keep = vals[vals.real >= re_floor]
    return sorted(keep, key=lambda z: -z.real)
