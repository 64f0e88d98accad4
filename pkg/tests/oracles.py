"""Independent oracles: shooting integrators, finite differences, brute duals.

Everything here deliberately avoids the production code paths it checks:
the ODE oracles integrate with scipy's RK45 and bisection, the dual oracle
is plain sphere sampling with a local polish, and gradients come from
central differences.
"""

import math

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from finslerhardy import norms


def fd_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h * max(1.0, abs(x[i]))
        g[i] = (f(x + e) - f(x - e)) / (2.0 * e[i])
    return g


def brute_dual_norm(fam, y, n_samples=1_000_000, seed=123, polish_iters=200):
    """sup y.xi / H(xi) over random sphere samples plus a local polish."""
    rng = np.random.default_rng(seed)
    best_val, best_xi = -np.inf, None
    chunk = 200_000
    left = n_samples
    while left > 0:
        m = min(chunk, left)
        left -= m
        xi = rng.standard_normal((m, fam.n))
        vals = xi @ y / norms.norm_eval(fam, None, xi)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_xi = float(vals[i]), xi[i]
    xi = best_xi / norms.norm_eval(fam, None, best_xi)
    val = float(y @ xi)
    step = 0.5
    for _ in range(polish_iters):
        trial = xi + step * (y / np.linalg.norm(y))
        trial /= norms.norm_eval(fam, None, trial)
        tval = float(y @ trial)
        if tval > val:
            xi, val = trial, tval
        else:
            step *= 0.5
            if step < 1e-14:
                break
    return val


# ---------------------------------------------------------------------------
# radial Green shooting oracle
# ---------------------------------------------------------------------------


def shoot_green(prob, r_match=None, rtol=1e-10):
    """Shooting solution of -(r^(n-1) psi(u'))' + r^(n-1) c_p V psi(u) = r^(n-1) phi.

    Integrates [u, w] with w = r^(n-1) psi(u') from the regular center
    (w = 0) and bisects the center value u0 against the exact decaying
    far-field continuation at ``r_match`` (flux is constant there, so
    u_tail = w^(1/(p-1)) (p-1)/(n-p) r^(beta)); valid for p < n with
    compactly supported V and phi.
    """
    p, n = prob.p, prob.n
    if not p < n:
        raise ValueError("the decay-matched oracle needs p < n")
    c_p = prob.c_p
    if r_match is None:
        top = prob.phi.r_b
        if prob.V is not None and hasattr(prob.V, "support"):
            top = max(top, prob.V.support[1])
        r_match = 3.0 * top
    r0 = prob.r_min

    def rhs(r, y):
        u, w = y
        du = math.copysign(abs(w / r ** (n - 1)) ** (1.0 / (p - 1.0)), w)
        V = float(prob.V(np.asarray([r]))[0]) if prob.V is not None else 0.0
        dw = r ** (n - 1) * (c_p * V * math.copysign(abs(u) ** (p - 1.0), u)
                             - float(prob.phi(np.asarray([r]))[0]))
        return [du, dw]

    def mismatch(u0):
        sol = solve_ivp(rhs, (r0, r_match), [u0, 0.0], rtol=rtol, atol=1e-14,
                        dense_output=False, max_step=(r_match - r0) / 50.0)
        u_end, w_end = sol.y[0][-1], sol.y[1][-1]
        flux = -w_end
        if flux <= 0.0:
            return u_end  # undershoot: no outward flux, u too small
        u_tail = flux ** (1.0 / (p - 1.0)) * (p - 1.0) / (n - p) \
            * r_match ** ((p - n) / (p - 1.0))
        return u_end - u_tail

    lo, hi = 1e-8, 1.0
    while mismatch(hi) < 0.0:
        hi *= 4.0
        if hi > 1e8:
            raise RuntimeError("oracle bracket failed")
    while mismatch(lo) > 0.0:
        lo *= 0.25
        if lo < 1e-14:
            raise RuntimeError("oracle bracket failed")
    u0 = brentq(mismatch, lo, hi, xtol=1e-14, rtol=1e-13)
    sol = solve_ivp(rhs, (r0, r_match), [u0, 0.0], rtol=rtol, atol=1e-14,
                    dense_output=True)
    return u0, sol


# ---------------------------------------------------------------------------
# 1D p-Laplacian eigenvalue shooting oracle
# ---------------------------------------------------------------------------


def shoot_eigen(p, L, V=None, count_zero=0, lam_hi=None, rtol=1e-11):
    """Eigenvalue via shooting: integrate u' = psi^{-1}(w), w' = (V - lam) psi(u).

    ``count_zero = 0`` targets the principal eigenvalue (u > 0 inside),
    ``count_zero = 1`` the second one (exactly one interior zero).
    """

    def psi_inv(w):
        return math.copysign(abs(w) ** (1.0 / (p - 1.0)), w)

    def psi(u):
        return math.copysign(abs(u) ** (p - 1.0), u)

    def endpoint(lam):
        def rhs(x, y):
            u, w = y
            Vx = float(V(np.asarray([x]))[0]) if V is not None else 0.0
            return [psi_inv(w), (Vx - lam) * psi(u)]

        sol = solve_ivp(rhs, (0.0, L), [0.0, 1.0], rtol=rtol, atol=1e-14,
                        dense_output=True)
        xs = np.linspace(0.0, L, 2048)
        us = sol.sol(xs)[0]
        s = np.sign(us[1:-1])
        zeros = int(np.sum((s[1:] * s[:-1]) < 0.0))
        return float(us[-1]), zeros

    vmax = 0.0
    if V is not None:
        vmax = float(np.max(np.abs(V(np.linspace(0, L, 512)))))
    base = (p - 1.0) * (2.0 * math.pi / (p * math.sin(math.pi / p)) / L) ** p
    lam_lo = -vmax - 1.0
    lam_hi = lam_hi or (base * (count_zero + 2.0) ** p + 2.0 * vmax + 10.0)
    grid = np.linspace(lam_lo, lam_hi, 200)
    prev_u, prev_lam = None, None
    roots = []
    for lam in grid:
        u_end, zeros = endpoint(lam)
        if prev_u is not None and u_end * prev_u < 0.0:
            lam_root = brentq(lambda s: endpoint(s)[0], prev_lam, lam,
                              xtol=1e-12, rtol=1e-13)
            _, z = endpoint(lam_root)
            roots.append((lam_root, z))
            if len(roots) > count_zero:
                break
        prev_u, prev_lam = u_end, lam
    for lam_root, z in roots:
        if z == count_zero:
            return lam_root
    raise RuntimeError(f"no eigenvalue with {count_zero} interior zeros found")


def shoot_eigen_ball(p, n, lam):
    """u(1) for the radial ball eigen-ODE shot from the regular center.

    Integrates -(r^(n-1) psi(u'))' = lam r^(n-1) psi(u), u(0) = 1, zero
    center flux; bracketing the returned endpoint over lam locates the
    radial eigenvalues.
    """

    def rhs(r, y):
        u, w = y
        du = math.copysign(abs(w / max(r ** (n - 1), 1e-30)) ** (1.0 / (p - 1.0)), w)
        return [du, -lam * r ** (n - 1) * math.copysign(abs(u) ** (p - 1.0), u)]

    sol = solve_ivp(rhs, (1e-8, 1.0), [1.0, 0.0], rtol=1e-11, atol=1e-16)
    return float(sol.y[0][-1])


def radial_energy_1d(profile_prime, p, n, r0, r1):
    """ang * int |phi'(r)|^p r^(n-1) dr by adaptive quadrature (oracle)."""
    ang = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
    val, _ = quad(lambda r: abs(profile_prime(r)) ** p * r ** (n - 1), r0, r1,
                  limit=400)
    return ang * val
