"""Positive scalar fields on punctured domains and their verification tools.

The explicit anisotropic p-harmonic candidates live here:

* the dual-power field ``H0(x)^((p-n)/(p-1))`` for ``p != n``,
* the logarithmic field ``log(R / H0(x))`` for ``p = n``,

together with radial profile fields (Green potentials, synthetic capped
profiles), composition (chain rule), smooth bump test functions, a weak
residual verifier for ``-div a(x, grad u) + V u^(p-1) = 0``, and level-set
flux quadrature for the coarea constant.

Every field evaluates on point arrays of shape (m, n) and exposes an
analytic gradient when one exists; otherwise central differences with a
puncture-aware step are used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import norms, quadrature
from .errors import BranchError, DomainError

# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Domain:
    """A punctured radial domain (puncture at the origin) or an interval."""

    kind: str          # punctured_ball | annulus | punctured_space | interval
    n: int
    r_inner: float     # 0 for punctured ball / space
    r_outer: float     # ball radius, outer annulus radius, or truncation radius

    def __post_init__(self):
        if self.kind == "annulus" and not 0.0 < self.r_inner < self.r_outer:
            raise ValueError("annulus needs 0 < r0 < r1")
        if self.kind in ("punctured_ball", "punctured_space") and self.r_outer <= 0.0:
            raise ValueError("radius must be positive")


def annulus(r0, r1, n):
    return Domain("annulus", n, float(r0), float(r1))


def punctured_ball(R, n):
    return Domain("punctured_ball", n, 0.0, float(R))


def punctured_space(R_truncation, n):
    return Domain("punctured_space", n, 0.0, float(R_truncation))


def interval(L):
    return Domain("interval", 1, 0.0, float(L))


def _bounds(dom, inner_guard=1e-6):
    lo = dom.r_inner if dom.r_inner > 0.0 else inner_guard * dom.r_outer
    return lo, dom.r_outer


# ---------------------------------------------------------------------------
# scalar fields
# ---------------------------------------------------------------------------


class ScalarField:
    """Base: positive scalar field with an (analytic or FD) gradient.

    Radial fields carry ``radial = (metric, value, dvalue)`` where ``metric``
    is ``euclidean`` (profile of |x|) or ``dual`` (profile of H0(x)), plus
    ``radial_inverse(t)`` when the profile is invertible.
    """

    kind = "generic"
    radial = None
    support = None

    def __call__(self, x):
        raise NotImplementedError

    def grad(self, x):
        return self._fd_grad(x)

    def _fd_grad(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        dist = np.linalg.norm(x, axis=-1)
        h = np.minimum(1e-6, 0.01 * dist)
        g = np.zeros_like(x)
        for i in range(x.shape[1]):
            e = np.zeros(x.shape[1])
            e[i] = 1.0
            g[:, i] = (self(x + h[:, None] * e) - self(x - h[:, None] * e)) / (2.0 * h)
        return g

    def radial_inverse(self, t):
        raise NotImplementedError


class FuncField(ScalarField):
    """Wrap plain callables; gradient falls back to central differences."""

    def __init__(self, fn, grad=None, kind="generic", support=None):
        self._fn = fn
        self._grad = grad
        self.kind = kind
        self.support = support

    def __call__(self, x):
        return self._fn(np.asarray(x, dtype=float))

    def grad(self, x):
        if self._grad is None:
            return super().grad(x)
        return self._grad(np.asarray(x, dtype=float))


class DualPowerField(ScalarField):
    """G(x) = H0(x)^a with a = (p-n)/(p-1); anisotropic p-harmonic off the puncture."""

    kind = "dual_power"

    def __init__(self, fam, params):
        if fam.kind == "weighted":
            raise BranchError("dual-power field needs an x-independent family")
        if params.p == params.n:
            raise BranchError("p = n has no dual-power field; use the log field")
        self.fam = fam
        self.p = params.p
        self.n = params.n
        self.a = (params.p - params.n) / (params.p - 1.0)
        self.radial = ("dual", lambda r: r ** self.a,
                       lambda r: self.a * r ** (self.a - 1.0))

    def __call__(self, x):
        return norms.dual_norm(self.fam, None, x) ** self.a

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        if self.fam.has_closed_dual:
            h0 = norms.dual_norm(self.fam, None, x)
            g0 = norms.grad_dual(self.fam, x)
        else:
            h0, g0 = norms.dual_newton(self.fam, np.atleast_2d(x))
            h0 = h0.reshape(x.shape[:-1])
            g0 = g0.reshape(x.shape)
        return self.a * h0[..., None] ** (self.a - 1.0) * g0

    def radial_inverse(self, t):
        return np.asarray(t, dtype=float) ** (1.0 / self.a)


class LogDualField(ScalarField):
    """G(x) = log(R / H0(x)) on {H0 < R}; the p = n harmonic candidate."""

    kind = "log_dual"

    def __init__(self, fam, params, R):
        if fam.kind == "weighted":
            raise BranchError("log-dual field needs an x-independent family")
        if params.p != params.n:
            raise BranchError("log-dual field is the p = n candidate")
        if R <= 0.0:
            raise ValueError("R must be positive")
        self.fam = fam
        self.p = params.p
        self.n = params.n
        self.R = float(R)
        self.radial = ("dual", lambda r: np.log(self.R / r), lambda r: -1.0 / r)

    def __call__(self, x):
        h0 = norms.dual_norm(self.fam, None, x)
        if np.any(h0 >= self.R):
            raise DomainError("point outside {H0 < R}")
        return np.log(self.R / h0)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        h0 = norms.dual_norm(self.fam, None, x)
        if np.any(h0 >= self.R):
            raise DomainError("point outside {H0 < R}")
        g0 = norms.grad_dual(self.fam, x) if self.fam.has_closed_dual \
            else norms.dual_newton(self.fam, np.atleast_2d(x))[1].reshape(x.shape)
        return -g0 / h0[..., None]

    def radial_inverse(self, t):
        return self.R * np.exp(-np.asarray(t, dtype=float))


class RadialProfileField(ScalarField):
    """Field defined by a 1D profile of the radial coordinate (either metric)."""

    def __init__(self, profile, dprofile, fam=None, metric="euclidean",
                 kind="radial", bracket=None, support=None):
        self._profile = profile
        self._dprofile = dprofile
        self.fam = fam
        self.metric = metric if (fam is None or fam.kind != "euclidean") else "euclidean"
        self.kind = kind
        self.radial = (self.metric, profile, dprofile)
        self._bracket = bracket  # (r_lo, r_hi) for inversion
        self.support = support

    def _rho(self, x):
        x = np.asarray(x, dtype=float)
        if self.metric == "euclidean":
            return np.linalg.norm(x, axis=-1)
        return norms.dual_norm(self.fam, None, x)

    def _rho_grad(self, x):
        x = np.asarray(x, dtype=float)
        if self.metric == "euclidean":
            return x / np.linalg.norm(x, axis=-1, keepdims=True)
        if self.fam.has_closed_dual:
            return norms.grad_dual(self.fam, x)
        return norms.dual_newton(self.fam, np.atleast_2d(x))[1].reshape(x.shape)

    def __call__(self, x):
        return self._profile(self._rho(x))

    def grad(self, x):
        rho = self._rho(x)
        return self._dprofile(rho)[..., None] * self._rho_grad(x)

    def radial_inverse(self, t):
        t = float(t)
        lo, hi = self._bracket
        return brentq(lambda r: self._profile(np.asarray([r]))[0] - t, lo, hi,
                      xtol=1e-14 * hi, rtol=8.9e-16)


class ComposedField(ScalarField):
    """f(inner field) with the chain rule; f given with its derivative."""

    def __init__(self, f, fprime, inner, kind="composed"):
        self._f = f
        self._fp = fprime
        self.inner = inner
        self.kind = kind
        if inner.radial is not None:
            metric, prof, dprof = inner.radial
            self.radial = (metric,
                           lambda r: f(prof(r)),
                           lambda r: fprime(prof(r)) * dprof(r))

    def __call__(self, x):
        return self._f(self.inner(x))

    def grad(self, x):
        return self._fp(self.inner(x))[..., None] * self.inner.grad(x)

    def radial_inverse(self, t):
        raise NotImplementedError("invert through the inner field instead")


def make_dual_power_field(fam, params):
    """The explicit p-harmonic field H0^((p-n)/(p-1)) (p != n, x-independent fam)."""
    return DualPowerField(fam, params)


def make_log_dual_field(fam, params, R):
    """The p = n candidate log(R / H0) on the H0-ball of radius R."""
    return LogDualField(fam, params, R)


def power_of(field, exponent):
    """field^exponent with the chain rule (used for ground states t^((p-1)/p))."""
    e = float(exponent)
    return ComposedField(lambda t: t ** e, lambda t: e * t ** (e - 1.0), field,
                         kind=f"pow[{e:g}]({field.kind})")


def synthetic_capped_profile(sigma, R, a=2.0, b=0.0, n=2):
    """Radial profile sigma (1 - (r/R)^a)(r/R)^b on (0, R): 0 < G < sigma.

    Not claimed p-harmonic; exercises the capped weight formulas.  b = 0
    gives the limit shape G -> sigma at the puncture, G -> 0 at r = R.
    """
    sigma, R, a, b = float(sigma), float(R), float(a), float(b)

    def prof(r):
        z = np.asarray(r, dtype=float) / R
        return sigma * (1.0 - z ** a) * (z ** b if b else 1.0)

    def dprof(r):
        z = np.asarray(r, dtype=float) / R
        if b:
            return sigma * (b * z ** (b - 1.0) * (1.0 - z ** a) - a * z ** (a + b - 1.0)) / R
        return -sigma * a * z ** (a - 1.0) / R

    return RadialProfileField(prof, dprof, metric="euclidean", kind="sigma_capped",
                              bracket=(1e-12 * R, R * (1.0 - 1e-12)))


# ---------------------------------------------------------------------------
# bump test functions
# ---------------------------------------------------------------------------


class Bump(ScalarField):
    """C^infinity bump A exp(1 - 1/(1 - |x-c|^2/rho^2)) supported in B_rho(c)."""

    kind = "bump"

    def __init__(self, center, rho, amplitude=1.0):
        self.center = np.asarray(center, dtype=float)
        self.rho = float(rho)
        self.amplitude = float(amplitude)
        r = np.linalg.norm(self.center)
        self.support = (r - self.rho, r + self.rho)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = np.sum((x - self.center) ** 2, axis=-1) / self.rho ** 2
        out = np.zeros(u.shape)
        inside = u < 1.0
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - u[inside]))
        return out

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        d = x - self.center
        u = np.sum(d ** 2, axis=-1) / self.rho ** 2
        out = np.zeros_like(x)
        inside = u < 1.0
        vals = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - u[inside]))
        fac = -vals / (1.0 - u[inside]) ** 2 * (2.0 / self.rho ** 2)
        out[inside] = fac[:, None] * d[inside]
        return out


def _ball_scheme(center, rho, n, n_panels, n_ang, order=2):
    """Local polar quadrature on B_rho(center), composite Gauss in radius."""
    gx, gw = quadrature._gauss(order)
    edges = np.linspace(0.0, rho, n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    r = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    wr = (half[:, None] * gw[None, :]).ravel()
    omega, wo = (quadrature.circle_rule(n_ang) if n == 2
                 else quadrature.sphere_rule(max(4, n_ang // 2)))
    nodes = center[None, :] + (r[:, None, None] * omega[None, :, :]).reshape(-1, n)
    w = (wr[:, None] * r[:, None] ** (n - 1) * wo[None, :]).ravel()
    return nodes, w


def random_bumps(dom, n_tests, seed, margin=0.05, rho_frac=(0.25, 0.75)):
    """Seeded bump family inside the domain, supports clear of puncture and boundary."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    lo, hi = _bounds(dom, inner_guard=1e-3)
    lo = lo if dom.r_inner > 0.0 else hi * 1e-3
    bumps = []
    for _ in range(n_tests):
        rc = math.exp(rng.uniform(math.log(lo * (1.0 + 4.0 * margin)),
                                  math.log(hi * (1.0 - 4.0 * margin))))
        direction = rng.standard_normal(dom.n)
        direction /= np.linalg.norm(direction)
        gap = min(rc - lo, hi - rc, rc * 0.45)
        rho = rng.uniform(*rho_frac) * gap
        amp = math.exp(rng.uniform(math.log(0.5), math.log(2.0)))
        bumps.append(Bump(rc * direction, rho, amp))
    return bumps


def _cap_rule(center_dir, gamma, n, n_ang):
    """Directions within angle gamma of center_dir with surface weights."""
    gx, gw = quadrature._gauss(3)
    if n == 2:
        phi_c = math.atan2(center_dir[1], center_dir[0])
        edges = np.linspace(phi_c - gamma, phi_c + gamma, max(2, n_ang // 3) + 1)
        mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * (edges[1:] - edges[:-1])
        ang = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
        w = (half[:, None] * gw[None, :]).ravel()
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1), w
    # n == 3: polar cap in local coordinates
    ref = np.array([0.0, 0.0, 1.0]) if abs(center_dir[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    t1 = np.cross(ref, center_dir)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(center_dir, t1)
    n_mu = max(2, n_ang // 4)
    edges = np.linspace(math.cos(gamma), 1.0, n_mu + 1)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * (edges[1:] - edges[:-1])
    mu = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    wmu = (half[:, None] * gw[None, :]).ravel()
    n_b = max(8, n_ang // 2)
    beta = 2.0 * math.pi * np.arange(n_b) / n_b
    wb = 2.0 * math.pi / n_b
    st = np.sqrt(np.maximum(0.0, 1.0 - mu ** 2))
    omega = (mu[:, None, None] * center_dir[None, None, :]
             + (st[:, None] * np.cos(beta)[None, :])[..., None] * t1[None, None, :]
             + (st[:, None] * np.sin(beta)[None, :])[..., None] * t2[None, None, :])
    w = (wmu[:, None] * np.full(n_b, wb)[None, :])
    return omega.reshape(-1, 3), w.ravel()


def _shell_patch(fam, metric, bump, n, n_rho=16, n_ang=24):
    """Shell-aligned quadrature patch covering a bump's support.

    Nodes sit on rays x = rho * Theta(omega) of the radial metric, each ray
    carrying composite Gauss panels over its exact chord through the bump
    ball.  For fields that are radial in this metric the weak-form
    integrand integrates to ~0 along every ray, so the angular regularity
    of the dual norm never limits the accuracy.
    """
    c = bump.center
    rc = np.linalg.norm(c)
    gamma = math.asin(min(0.999999, bump.rho / rc))
    omega, wo = _cap_rule(c / rc, gamma, n, n_ang)
    if metric == "euclidean" or fam.kind == "euclidean":
        theta, J = omega, np.ones(len(omega))
    else:
        theta, J, _ = quadrature._dual_shell_geometry(fam, omega)
    # chord of each ray rho -> rho*Theta against the euclidean ball B_rho(c)
    tt = np.einsum("ij,ij->i", theta, theta)
    tc = theta @ c
    disc = tc ** 2 - tt * (rc ** 2 - bump.rho ** 2)
    keep = disc > 0.0
    theta, J, wo, tt, tc, disc = theta[keep], J[keep], wo[keep], tt[keep], tc[keep], disc[keep]
    sq = np.sqrt(disc)
    rho_lo = (tc - sq) / tt
    rho_hi = (tc + sq) / tt
    gx, gw = quadrature._gauss(3)
    frac = np.linspace(0.0, 1.0, n_rho + 1)
    edges = rho_lo[:, None] + (rho_hi - rho_lo)[:, None] * frac[None, :]  # (nray, n_rho+1)
    mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
    half = 0.5 * (edges[:, 1:] - edges[:, :-1])
    rho = (mid[..., None] + half[..., None] * gx).reshape(len(theta), -1)   # (nray, nq)
    wr = (half[..., None] * gw).reshape(len(theta), -1)
    nodes = rho[..., None] * theta[:, None, :]
    w = wr * rho ** (n - 1) * (wo * J)[:, None]
    return nodes.reshape(-1, n), w.ravel()


def weak_residual(fam, field, dom, V=None, n_tests=100, seed=0,
                  n_rho=16, n_ang=24, layout="shell", return_all=False):
    """Max over random bumps phi of |int a(x, grad u).grad phi + V u^(p-1) phi| / ||phi||_W1p.

    ``V`` may be ``None`` (zero), a callable on points, or a field.  A small
    residual over a rich bump family is the operational signature that
    ``u`` solves ``-div a(x, grad u) + V u^(p-1) = 0`` weakly.

    ``layout="shell"`` aligns the quadrature patches with the field's
    radial shells (exact ray chords, immune to the angular regularity of
    the dual norm); ``layout="ball"`` uses plain bump-centered polar grids,
    whose error decreases monotonically under ``n_rho`` refinement and so
    drives the refinement checks.  All bumps are evaluated through one
    batched field/operator call, which is what makes families with a
    Newton-based dual affordable.
    """
    p = fam.p
    metric = field.radial[0] if field.radial is not None else "euclidean"
    schemes = []
    for bump in random_bumps(dom, n_tests, seed):
        if layout == "shell":
            nodes, w = _shell_patch(fam, metric, bump, dom.n, n_rho=n_rho, n_ang=n_ang)
        else:
            nodes, w = _ball_scheme(bump.center, bump.rho, dom.n, n_rho, n_ang)
        schemes.append((bump, nodes, w))
    all_nodes = np.concatenate([nd for _, nd, _ in schemes], axis=0)
    gu = np.asarray(field.grad(all_nodes), dtype=float)
    a, _ = norms.operator_a(fam, all_nodes, gu)
    uvals = vvals = None
    if V is not None:
        uvals = np.asarray(field(all_nodes), dtype=float)
        vvals = np.asarray(V(all_nodes), dtype=float)
    res = []
    ofs = 0
    for bump, nodes, w in schemes:
        m = len(nodes)
        sl = slice(ofs, ofs + m)
        ofs += m
        gphi = bump.grad(nodes)
        vals = np.einsum("ij,ij->i", a[sl], gphi)
        if V is not None:
            vals = vals + vvals[sl] * uvals[sl] ** (p - 1.0) * bump(nodes)
        num = abs(float(np.dot(w, vals)))
        phiv = bump(nodes)
        gq = np.linalg.norm(gphi, axis=-1)
        den = float(np.dot(w, np.abs(phiv) ** p + gq ** p)) ** (1.0 / p)
        res.append(num / den)
    return res if return_all else max(res)


# ---------------------------------------------------------------------------
# level-set flux and coarea checks
# ---------------------------------------------------------------------------


def level_set_flux(fam, field, dom, t, n_ang=96):
    """Surface quadrature of H(grad G)^p / |grad G| over the level set {G = t}.

    Level sets must be radial shells of the field's metric (H0-spheres for
    the dual-power/log fields, round spheres for radial-profile fields).
    For a p-harmonic G this flux is the coarea constant, independent of t.
    """
    if field.radial is None:
        raise ValueError("level sets are only parametrized for radial fields")
    metric, prof, dprof = field.radial
    rho = float(field.radial_inverse(t))
    lo, hi = _bounds(dom)
    if not (lo * (1.0 - 1e-12) <= rho <= hi * (1.0 + 1e-12)):
        raise DomainError(f"level {t} maps to radius {rho:.3g} outside the domain")
    n = dom.n
    omega, wo = (quadrature.circle_rule(n_ang) if n == 2
                 else quadrature.sphere_rule(n_ang))
    if metric == "euclidean" or fam.kind == "euclidean":
        theta, J, grad_len = omega, np.ones(len(omega)), np.ones(len(omega))
    else:
        theta, J, grad_len = quadrature._dual_shell_geometry(fam, omega)
    x = rho * theta
    gu = np.asarray(field.grad(x), dtype=float)
    hval = norms.norm_eval(fam, x, gu)
    glen = np.linalg.norm(gu, axis=-1)
    integrand = hval ** fam.p / glen
    return rho ** (n - 1) * float(np.dot(wo, integrand * grad_len * J))


def flux_constancy(fam, field, dom, levels, n_ang=96):
    """Fluxes over the given levels and their coefficient of variation."""
    fluxes = np.array([level_set_flux(fam, field, dom, t, n_ang=n_ang) for t in levels])
    cv = float(fluxes.std() / fluxes.mean())
    return fluxes, cv


def preimage_bounds(field, t_lo, t_hi):
    """Radial interval mapped onto the value interval [t_lo, t_hi] (monotone profiles).

    The properness surrogate: compact value intervals pull back to radial
    intervals bounded away from the puncture and the outer boundary.
    """
    r1 = float(field.radial_inverse(t_lo))
    r2 = float(field.radial_inverse(t_hi))
    return (min(r1, r2), max(r1, r2))
