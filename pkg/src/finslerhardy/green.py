"""Radial Green potentials of -div a(grad u) + c_p V |u|^(p-2) u = phi.

For the euclidean norm kind the equation reduces to the radial ODE

    -(r^(n-1) psi(u'))' + r^(n-1) c_p V(r) psi(u) = r^(n-1) phi(r),
    psi(z) = |z|^(p-2) z,

with a zero-flux (regular center) condition at the inner guard radius and
either a Dirichlet condition u(R_out) = 0 (bounded-domain semantics) or a
far-field power-decay condition matching u ~ A r^((p-n)/(p-1)) (truncation
of R^n, p < n), which encodes lim_{x->infinity} u = 0 exactly.

Discretization: P1 finite elements on a geometric mesh (p-flux exact per
element, potential/source by per-element Gauss), damped Newton with the
degenerate gradient regularized as (z^2 + eps^2)^((p-2)/2) z, eps = 1e-10,
warm-started from the exact p = 2 linear solve and continued in the
exponent p.  Amplitude continuation is unnecessary: u solves with phi iff
s u solves with s^(p-1) phi, exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from . import quadrature
from .errors import SolverError

EPS_REG = 1e-10


def _psi(z, p, eps=0.0):
    """|z|^(p-2) z; the optional eps smooths only the Jacobian path."""
    if eps == 0.0:
        z = np.asarray(z, dtype=float)
        return np.sign(z) * np.abs(z) ** (p - 1.0)
    return z * (z * z + eps * eps) ** ((p - 2.0) / 2.0)


def _dpsi(z, p, eps=EPS_REG):
    return (z * z + eps * eps) ** ((p - 4.0) / 2.0) * ((p - 1.0) * z * z + eps * eps)


class BumpDensity:
    """Smooth radial bump supported on [r_a, r_b], normalized to total mass."""

    def __init__(self, r_a, r_b, mass, n):
        if not 0.0 < r_a < r_b:
            raise ValueError("need 0 < r_a < r_b")
        self.r_a, self.r_b, self.mass, self.n = float(r_a), float(r_b), float(mass), int(n)
        ang = n * quadrature.unit_ball_volume(n=n, metric="euclidean")
        r, w = quadrature.log_radial_rule(self.r_a, self.r_b, 512)
        raw = self._shape(r)
        self._scale = self.mass / (ang * float(np.dot(w * r ** (n - 1), raw)))

    def _shape(self, r):
        z = (2.0 * np.asarray(r, dtype=float) - (self.r_a + self.r_b)) / (self.r_b - self.r_a)
        out = np.zeros_like(z)
        inside = np.abs(z) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
        return out

    def __call__(self, r):
        return self._scale * self._shape(r)


def bump_potential(r_a, r_b, depth):
    """Nonpositive smooth radial potential -depth * bump profile on [r_a, r_b]."""
    r_a, r_b, depth = float(r_a), float(r_b), float(depth)

    def V(r):
        z = (2.0 * np.asarray(r, dtype=float) - (r_a + r_b)) / (r_b - r_a)
        out = np.zeros_like(z)
        inside = np.abs(z) < 1.0
        out[inside] = -depth * np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
        return out

    V.support = (r_a, r_b)
    return V


@dataclass
class RadialProblem:
    p: float
    n: int
    phi: BumpDensity
    V: object = None                  # callable r -> value, or None
    R_out: float = 100.0
    n_cells: int = 2048
    r_min: float | None = None
    boundary: str = "decay"           # decay | dirichlet

    def __post_init__(self):
        if self.r_min is None:
            self.r_min = min(self.phi.r_a / 50.0, self.R_out * 1e-5)
        if self.boundary == "decay" and self.p >= self.n:
            # no power decay for p >= n; fall back to the bounded-domain BC
            self.boundary = "dirichlet"

    @property
    def c_p(self):
        return (self.p / (self.p - 1.0)) ** (self.p - 1.0)

    @property
    def decay_exponent(self):
        return (self.p - self.n) / (self.p - 1.0)


def load_problem(path_or_dict):
    """Problem file (JSON): {p, n, V:{type,params}, phi:{r_a,r_b,mass}, R_out, mesh}."""
    if isinstance(path_or_dict, dict):
        spec = path_or_dict
    else:
        with open(path_or_dict) as fh:
            spec = json.load(fh)
    n = int(spec["n"])
    phi = BumpDensity(spec["phi"]["r_a"], spec["phi"]["r_b"],
                      spec["phi"].get("mass", 1.0), n)
    V = None
    vs = spec.get("V")
    if vs and vs.get("type", "none") != "none":
        if vs["type"] == "bump":
            V = bump_potential(vs["r_a"], vs["r_b"], vs["depth"])
        else:
            raise ValueError(f"unknown potential type {vs['type']!r}")
    return RadialProblem(p=float(spec["p"]), n=n, phi=phi, V=V,
                         R_out=float(spec.get("R_out", 100.0)),
                         n_cells=int(spec.get("mesh", 2048)),
                         boundary=spec.get("boundary", "decay"))


@dataclass
class GreenPotential:
    r: np.ndarray
    u: np.ndarray
    residual: float
    problem: RadialProblem
    newton_iters: int
    _interp: object = field(default=None, repr=False)
    _dinterp: object = field(default=None, repr=False)

    def __post_init__(self):
        self._interp = PchipInterpolator(self.r, self.u, extrapolate=False)
        self._dinterp = self._interp.derivative()

    def profile(self, r):
        r = np.clip(np.asarray(r, dtype=float), self.r[0], self.r[-1])
        return self._interp(r)

    def dprofile(self, r):
        r = np.clip(np.asarray(r, dtype=float), self.r[0], self.r[-1])
        return self._dinterp(r)

    def radius_of_level(self, t):
        """Radius with u(r) = t on the decreasing far side (outside supp phi)."""
        lo = self.problem.phi.r_b
        hi = self.r[-1]
        return brentq(lambda rr: float(self.profile(rr)) - t, lo, hi,
                      xtol=1e-14 * hi)


def _mesh(prob):
    r = np.geomspace(prob.r_min, prob.R_out, prob.n_cells + 1)
    # keep the density support crossings as mesh points
    for a in (prob.phi.r_a, prob.phi.r_b):
        i = int(np.argmin(np.abs(r - a)))
        if 0 < i < len(r) - 1:
            r[i] = a
    sup = getattr(prob.V, "support", None)
    if sup:
        for a in sup:
            i = int(np.argmin(np.abs(r - a)))
            if 0 < i < len(r) - 1:
                r[i] = a
    return r


def _assemble(prob, r, u_in, p, gx, gw):
    """Residual and tridiagonal Jacobian bands for the interior unknowns.

    Unknowns are u_0..u_{N-1}; the last node u_N is eliminated through the
    outer boundary condition u_N = cN u_{N-1} (cN = 0 for Dirichlet, the
    power-decay ratio otherwise).  Weak form per node i:

        F_i = fl_{i-1} - fl_i + L_i,   fl_e = psi(u'_e) m_e / h_e,

    with m_e the exact element moment int_e r^(n-1) dr and L_i the Gauss
    load of (c_p V psi(u) - phi) against the hat of node i.
    """
    n = prob.n
    c_p = prob.c_p
    N = len(r) - 1
    cN = (r[-1] / r[-2]) ** prob.decay_exponent if prob.boundary == "decay" else 0.0
    u = np.concatenate([u_in, [cN * u_in[-1]]])
    h = np.diff(r)
    me = (r[1:] ** n - r[:-1] ** n) / n
    du = np.diff(u) / h
    # regularization kept three orders below the smallest physical slope
    # (the outer one): bias (eps/|u'|)^2 <= 1e-6 everywhere except exact
    # plateaus, where du = 0 solves the regularized and exact systems alike
    du_out = abs(float(du[-1]))
    eps = 1e-3 * du_out if du_out > 0.0 else EPS_REG
    fl = _psi(du, p, eps=eps) * me / h
    d = _dpsi(du, p, eps=eps) * me / h ** 2       # d fl_e / d u_{e+1} = +d_e
    # loads: 2-pt Gauss per element, P1 hats
    mid = 0.5 * (r[1:] + r[:-1])
    half = 0.5 * (r[1:] - r[:-1])
    rg = mid[:, None] + half[:, None] * gx[None, :]
    wg = half[:, None] * gw[None, :] * rg ** (n - 1)
    lam = (rg - r[:-1, None]) / h[:, None]
    phi_g = prob.phi(rg)
    V_g = prob.V(rg) if prob.V is not None else np.zeros_like(rg)
    u_g = u[:-1, None] * (1.0 - lam) + u[1:, None] * lam
    val = c_p * V_g * _psi(u_g, p, eps=eps) - phi_g
    dval = c_p * V_g * _dpsi(u_g, p, eps=eps)
    load_l = np.sum(wg * val * (1.0 - lam), axis=1)      # onto node e
    load_r = np.sum(wg * val * lam, axis=1)              # onto node e+1
    ll = np.sum(wg * dval * (1.0 - lam) ** 2, axis=1)
    lr = np.sum(wg * dval * (1.0 - lam) * lam, axis=1)
    rr = np.sum(wg * dval * lam ** 2, axis=1)

    F = np.zeros(N)
    F -= fl[:N]
    F[1:] += fl[: N - 1]
    F += load_l[:N]
    F[1:] += load_r[: N - 1]

    dmain = d[:N].copy()
    dmain[1:] += d[: N - 1]
    dmain += ll[:N]
    dmain[1:] += rr[: N - 1]
    dlow = -d[: N - 1] + lr[: N - 1]
    dup = -d[: N - 1] + lr[: N - 1]
    # boundary elimination: element N-1 couples u_{N-1} to itself via u_N
    # flux: d fl_{N-1}/d u_{N-1} = d_{N-1} (cN - 1); generic assembly above
    # used -d_{N-1} (as if u_N were fixed), correct by +cN d_{N-1}:
    dmain[N - 1] -= cN * d[N - 1]
    # load: u on element N-1 is u_{N-1}((1-lam) + cN lam)
    dmain[N - 1] += cN * lr[N - 1]
    return F, dlow, dmain, dup


def _tridiag_solve(dlow, dmain, dup, rhs):
    from scipy.linalg import solve_banded

    N = len(dmain)
    ab = np.zeros((3, N))
    ab[0, 1:] = dup
    ab[1, :] = dmain
    ab[2, :-1] = dlow
    return solve_banded((1, 1), ab, rhs)


def _linear_warm_start(prob, r, gx, gw):
    """Exact p = 2 solve of the same problem (psi = identity, one Newton step)."""
    u = np.zeros(len(r) - 1)
    for _ in range(3):
        F, dl, dm, du_ = _assemble(prob, r, u, 2.0, gx, gw)
        if np.linalg.norm(F) < 1e-14 * (1.0 + np.linalg.norm(u)):
            break
        u = u - _tridiag_solve(dl, dm, du_, F)
    return u


def solve_green(prob, max_iter=200, tol=3e-10, accept=5e-8):
    """Damped-Newton solve with exponent continuation from the p = 2 start.

    Raises :class:`SolverError` with the last residual on non-convergence
    (stagnation above ``accept``).  The returned residual is the scaled
    discrete norm of the final Newton residual, and the profile is the
    positive FEM solution with PCHIP interpolation.
    """
    r = _mesh(prob)
    gx, gw = quadrature._gauss(2)
    u = _linear_warm_start(prob, r, gx, gw)
    # load scale for the convergence test
    scale = float(np.linalg.norm(
        _assemble(prob, r, np.zeros(len(r) - 1), prob.p, gx, gw)[0]))
    p_path = [prob.p] if prob.p == 2.0 else list(np.linspace(2.0, prob.p, 8)[1:])
    total_iters = 0
    for p_now in p_path:
        p_tol = tol if p_now == prob.p else 1e-8
        last_res = math.inf
        stalled = 0
        for it in range(max_iter):
            F, dl, dm, du_ = _assemble(prob, r, u, p_now, gx, gw)
            res = float(np.linalg.norm(F)) / scale
            stalled = stalled + 1 if res > 0.5 * last_res else 0
            last_res = min(last_res, res)
            if res < p_tol or (res < accept and stalled >= 3):
                break
            step = _tridiag_solve(dl, dm, du_, F)
            lam = 1.0
            for _ in range(40):
                trial = u - lam * step
                Ft = _assemble(prob, r, trial, p_now, gx, gw)[0]
                if np.linalg.norm(Ft) < np.linalg.norm(F) * (1.0 - 1e-4 * lam):
                    break
                lam *= 0.5
            u = u - lam * step
            total_iters += 1
        else:
            raise SolverError(f"Newton stalled at p = {p_now}", residual=last_res)
    if prob.boundary == "decay":
        uN = (r[-1] / r[-2]) ** prob.decay_exponent * u[-1]
    else:
        uN = 0.0
    u_full = np.concatenate([u, [uN]])
    if np.any(u_full[:-1] <= 0.0):
        raise SolverError("solution lost positivity")
    F = _assemble(prob, r, u, prob.p, gx, gw)[0]
    return GreenPotential(r=r, u=u_full, residual=float(np.linalg.norm(F)) / scale,
                          problem=prob, newton_iters=total_iters)


# ---------------------------------------------------------------------------
# derived checks
# ---------------------------------------------------------------------------


def level_flux(gp, t):
    """ang * r_t^(n-1) |u'(r_t)|^(p-1): the level-set flux of the radial profile."""
    prob = gp.problem
    ang = prob.n * quadrature.unit_ball_volume(n=prob.n, metric="euclidean")
    r_t = gp.radius_of_level(t)
    return ang * r_t ** (prob.n - 1) * abs(float(gp.dprofile(r_t))) ** (prob.p - 1.0)


def flux_identity_rhs(gp, t, n_r=2048):
    """int_{u > t} (phi - c_p V psi(u)) dx over the superlevel ball."""
    prob = gp.problem
    ang = prob.n * quadrature.unit_ball_volume(n=prob.n, metric="euclidean")
    r_t = gp.radius_of_level(t)
    r, w = quadrature.log_radial_rule(gp.r[0], r_t, n_r,
                                      align=(prob.phi.r_a, prob.phi.r_b))
    vals = prob.phi(r)
    if prob.V is not None:
        vals = vals - prob.c_p * prob.V(r) * _psi(gp.profile(r), prob.p)
    return ang * float(np.dot(w * r ** (prob.n - 1), vals))


def flux_bound_check(gp, n_levels=20, rtol=1e-2):
    """Level-flux bounds (C0, M_phi) plus the Gauss-Green flux identity.

    ``C0 = max(int (phi + |V| G^(p-1)), 1 / int phi)`` is the computable
    constant of the two-sided level-flux bounds; the check verifies
    ``flux(t) <= C0`` for all levels, ``flux(t) >= 1/C0`` for ``t < M_phi``
    (the largest level whose superlevel set contains supp phi), and the
    identity ``flux(t) = int_{u>t} (phi - c_p V psi(u))``, all within
    ``rtol``.
    """
    prob = gp.problem
    ang = prob.n * quadrature.unit_ball_volume(n=prob.n, metric="euclidean")
    r, w = quadrature.log_radial_rule(gp.r[0], gp.r[-1], 2048,
                                      align=(prob.phi.r_a, prob.phi.r_b))
    wr = w * r ** (prob.n - 1)
    mass_phi = ang * float(np.dot(wr, prob.phi(r)))
    up_int = mass_phi
    if prob.V is not None:
        up_int = up_int + ang * prob.c_p * float(np.dot(
            wr, np.abs(prob.V(r)) * _psi(gp.profile(r), prob.p)))
    C0 = max(up_int, 1.0 / mass_phi)
    # M_phi: supp phi inside {u > t} iff t < min of u over supp phi
    rs = np.geomspace(prob.phi.r_a, prob.phi.r_b, 256)
    M_phi = float(np.min(gp.profile(rs)))
    t_hi = float(gp.profile(np.asarray([prob.phi.r_b]))[0])
    t_lo = float(gp.u[-2]) if prob.boundary == "dirichlet" else float(gp.u[-1])
    t_lo = max(t_lo * 1.5, t_hi * 1e-6)
    levels = np.geomspace(t_lo * 1.05, t_hi * 0.95, n_levels)
    rows = []
    for t in levels:
        fl = level_flux(gp, float(t))
        rhs = flux_identity_rhs(gp, float(t))
        rows.append({"t": float(t), "flux": fl, "rhs": rhs,
                     "rel_err": abs(fl / rhs - 1.0)})
    upper_ok = all(row["flux"] <= C0 * (1.0 + rtol) for row in rows)
    floor_ok = all(row["flux"] >= (1.0 - rtol) / C0
                   for row in rows if row["t"] < M_phi)
    worst = max(row["rel_err"] for row in rows)
    return {"C0": C0, "M_phi": M_phi, "rows": rows, "mass_phi": mass_phi,
            "upper_ok": upper_ok, "floor_ok": floor_ok,
            "worst_identity_rel_err": worst}


def farfield_exponent(gp, window=(4.0, 0.125)):
    """Fit u ~ A r^beta + B on [window[0]*r_b, window[1]*R_out]; returns (beta, A, B).

    The constant B absorbs any Dirichlet truncation offset; with the decay
    boundary condition B is at the noise level.
    """
    prob = gp.problem
    lo = window[0] * prob.phi.r_b
    hi = window[1] * prob.R_out
    if not lo < hi:
        raise ValueError("far-field window is empty; increase R_out")
    mask = (gp.r >= lo) & (gp.r <= hi)
    rr, uu = gp.r[mask], gp.u[mask]

    def resid(beta):
        X = np.stack([rr ** beta, np.ones_like(rr)], axis=1)
        coef, *_ = np.linalg.lstsq(X, uu, rcond=None)
        return float(np.linalg.norm(X @ coef - uu)), coef

    beta_grid = np.linspace(-4.0, -1e-3, 160) if prob.p < prob.n else \
        np.linspace(-4.0, 4.0, 320)
    vals = [resid(b)[0] for b in beta_grid]
    i = int(np.argmin(vals))
    lo_b = beta_grid[max(0, i - 1)]
    hi_b = beta_grid[min(len(beta_grid) - 1, i + 1)]
    from scipy.optimize import minimize_scalar

    opt = minimize_scalar(lambda b: resid(b)[0], bounds=(lo_b, hi_b),
                          method="bounded", options={"xatol": 1e-10})
    beta = float(opt.x)
    _, coef = resid(beta)
    return beta, float(coef[0]), float(coef[1])


def truncation_stability(prob, factor=2.0):
    """Relative profile change on [r_min, R_out/2] when R_out is scaled by ``factor``."""
    gp1 = solve_green(prob)
    prob2 = RadialProblem(p=prob.p, n=prob.n, phi=prob.phi, V=prob.V,
                          R_out=prob.R_out * factor,
                          n_cells=int(prob.n_cells * 1.25),
                          r_min=prob.r_min, boundary=prob.boundary)
    gp2 = solve_green(prob2)
    r = np.geomspace(gp1.r[0] * 1.01, prob.R_out / 2.0, 512)
    u1, u2 = gp1.profile(r), gp2.profile(r)
    return float(np.max(np.abs(u1 - u2) / np.abs(u2)))
