"""Norm families H(x, .) on R^n, their gradients, the monotone flux map, and dual norms.

A norm family assigns to (almost) every point x a norm ``H(x, .)`` on R^n.
Five kinds are supported:

==========  =====================================================
euclidean   ``H(xi) = |xi|_2``
lp(s)       ``H(xi) = (sum_i |xi_i|^s)^(1/s)``, ``s >= 2``
quadratic   ``H(xi) = sqrt(A xi . xi)``, ``A`` symmetric positive definite
mixed       ``H(xi) = (|xi|_s^p + |xi|_A^p)^(1/p)``
weighted    ``H(x, xi) = |x|^(delta/p) * N(xi)``, ``N`` a base family
==========  =====================================================

From ``H`` we derive the flux map ``a(x, xi) = grad_xi (H(x, xi)^p / p)
= H^(p-1) grad H``, which satisfies

* ``a(x, xi) . xi = H(x, xi)^p``,
* ``a(x, lam xi) = lam |lam|^(p-2) a(x, xi)``,
* strict monotonicity ``(a(x, xi) - a(x, eta)) . (xi - eta) > 0`` for
  ``xi != eta``,

and the dual norm ``H0(y) = sup_{xi != 0} y . xi / H(xi)`` (x-independent
kinds only) with its gradient.  The key calculus identities are
``H(grad H0(y)) = 1`` and ``y . grad H0(y) = H0(y)``.

All evaluators are vectorized: ``xi`` may be an array of shape ``(..., n)``
and results broadcast over the leading axes.  Everything is pure and
deterministic; stochastic helpers take an explicit seed and use a
counter-based (Philox) bit generator so per-sample streams are stable
under any parallel scheduling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, DomainError, UnsupportedKindError

KINDS = ("euclidean", "lp", "quadratic", "mixed", "weighted")

_SPD_SYM_TOL = 1e-12


def _as_spd(A, n=None):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConstructionError(f"matrix must be square, got shape {A.shape}")
    if n is not None and A.shape[0] != n:
        raise ConstructionError(f"matrix is {A.shape[0]}x{A.shape[0]}, dimension is {n}")
    if not np.allclose(A, A.T, rtol=0.0, atol=_SPD_SYM_TOL * max(1.0, float(np.abs(A).max()))):
        raise ConstructionError("matrix is not symmetric")
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise ConstructionError("matrix is not positive definite") from None
    return A


@dataclass(frozen=True, eq=False)
class GlobalParams:
    """Exponent/dimension bundle with the derived constant c_p = (p/(p-1))^(p-1)."""

    p: float
    n: int
    c_p: float = field(init=False)

    def __post_init__(self):
        if not 1.0 < self.p < math.inf:
            raise ConstructionError(f"p must lie in (1, inf), got {self.p}")
        if self.n < 2:
            raise ConstructionError(f"n must be >= 2, got {self.n}")
        object.__setattr__(self, "c_p", (self.p / (self.p - 1.0)) ** (self.p - 1.0))


@dataclass(frozen=True, eq=False)
class NormFamily:
    """A norm family of one of the five supported kinds.

    Use the factory functions :func:`euclidean`, :func:`lp`,
    :func:`quadratic`, :func:`mixed`, :func:`weighted` or
    :func:`parse_family` instead of the constructor.
    """

    kind: str
    p: float
    n: int
    s: float | None = None
    A: np.ndarray | None = None
    delta: float | None = None
    base: "NormFamily | None" = None
    A_inv: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConstructionError(f"unknown norm kind {self.kind!r}")
        if not 1.0 < self.p < math.inf:
            raise ConstructionError(f"p must lie in (1, inf), got {self.p}")
        if self.n < 2:
            raise ConstructionError(f"n must be >= 2, got {self.n}")
        if self.kind in ("lp", "mixed"):
            if self.s is None or self.s < 2.0:
                raise ConstructionError(f"lp/mixed require s >= 2, got {self.s}")
        if self.kind in ("quadratic", "mixed"):
            A = _as_spd(self.A, self.n)
            object.__setattr__(self, "A", A)
            object.__setattr__(self, "A_inv", np.linalg.inv(A))
        if self.kind == "weighted":
            if self.delta is None or self.delta < 0.0:
                raise ConstructionError(f"weighted requires delta >= 0, got {self.delta}")
            if self.base is None or self.base.kind == "weighted":
                raise ConstructionError("weighted requires an x-independent base family")
            if self.base.n != self.n or self.base.p != self.p:
                raise ConstructionError("base family must share p and n")

    # -- properties ---------------------------------------------------------

    @property
    def x_independent(self):
        return self.kind != "weighted"

    @property
    def has_closed_dual(self):
        return self.kind in ("euclidean", "lp", "quadratic")

    def label(self):
        if self.kind == "lp":
            return f"lp(s={self.s:g})"
        if self.kind == "quadratic":
            return f"quad({json.dumps(self.A.tolist())})"
        if self.kind == "mixed":
            return f"mix(s={self.s:g};A={json.dumps(self.A.tolist())})"
        if self.kind == "weighted":
            return f"weighted(delta={self.delta:g};base={self.base.label()})"
        return "euclidean"

    # -- evaluation, thin wrappers over the module functions ---------------

    def __call__(self, xi, x=None):
        return norm_eval(self, x, xi)

    def grad(self, xi, x=None):
        return grad_H(self, x, xi)

    def flux(self, xi, x=None):
        return operator_a(self, x, xi)

    def dual(self, y):
        return dual_norm(self, None, y)

    def dual_grad(self, y):
        return grad_dual(self, y)


def euclidean(p, n):
    return NormFamily("euclidean", float(p), int(n))


def lp(s, p, n):
    return NormFamily("lp", float(p), int(n), s=float(s))


def quadratic(A, p):
    A = np.asarray(A, dtype=float)
    return NormFamily("quadratic", float(p), A.shape[0], A=A)


def mixed(s, A, p):
    A = np.asarray(A, dtype=float)
    return NormFamily("mixed", float(p), A.shape[0], s=float(s), A=A)


def weighted(delta, base):
    return NormFamily("weighted", base.p, base.n, delta=float(delta), base=base)


def parse_family(spec, p, n):
    """Parse the norm-spec mini grammar.

    ``euclidean`` | ``lp:s=<f>`` | ``quad:[[..],..]`` | ``mix:s=<f>;A=[[..],..]``
    | ``weighted:delta=<f>;base=<spec>``.  Matrix literals are row-major JSON.
    """
    spec = spec.strip()
    if spec == "euclidean":
        return euclidean(p, n)
    if spec.startswith("lp:"):
        body = spec[3:]
        if not body.startswith("s="):
            raise ConstructionError(f"bad lp spec {spec!r}")
        return lp(float(body[2:]), p, n)
    if spec.startswith("quad:"):
        return quadratic(json.loads(spec[5:]), p)
    if spec.startswith("mix:"):
        body = spec[4:]
        parts = dict(kv.split("=", 1) for kv in body.split(";"))
        return mixed(float(parts["s"]), json.loads(parts["A"]), p)
    if spec.startswith("weighted:"):
        body = spec[len("weighted:"):]
        key, rest = body.split(";", 1)
        if not (key.startswith("delta=") and rest.startswith("base=")):
            raise ConstructionError(f"bad weighted spec {spec!r}")
        return weighted(float(key[len("delta="):]), parse_family(rest[len("base="):], p, n))
    raise ConstructionError(f"unrecognized family spec {spec!r}")


# ---------------------------------------------------------------------------
# primal norm, gradient, flux map
# ---------------------------------------------------------------------------


def _lp_norm(xi, s):
    # rescale by the max component so |z_i|^s cannot overflow
    m = np.max(np.abs(xi), axis=-1)
    safe = np.where(m > 0.0, m, 1.0)
    z = xi / safe[..., None]
    val = safe * np.sum(np.abs(z) ** s, axis=-1) ** (1.0 / s)
    return np.where(m > 0.0, val, 0.0)


def _lp_grad(xi, s):
    m = np.max(np.abs(xi), axis=-1, keepdims=True)
    safe = np.where(m > 0.0, m, 1.0)
    z = xi / safe
    a = np.sign(z) * np.abs(z) ** (s - 1.0)              # scale-free
    S = np.sum(np.abs(z) ** s, axis=-1, keepdims=True)
    return a * S ** (1.0 / s - 1.0)


def _quad_norm(xi, A):
    w = xi @ A
    return np.sqrt(np.einsum("...i,...i->...", xi, w))


def norm_eval(fam, x, xi):
    """H(x, xi).  ``x`` is only consulted by the weighted kind (and must be != 0 there)."""
    xi = np.asarray(xi, dtype=float)
    if fam.kind == "euclidean":
        return np.linalg.norm(xi, axis=-1)
    if fam.kind == "lp":
        return _lp_norm(xi, fam.s)
    if fam.kind == "quadratic":
        return _quad_norm(xi, fam.A)
    if fam.kind == "mixed":
        hs = _lp_norm(xi, fam.s)
        ha = _quad_norm(xi, fam.A)
        m = np.maximum(hs, ha)
        safe = np.where(m > 0.0, m, 1.0)
        val = safe * ((hs / safe) ** fam.p + (ha / safe) ** fam.p) ** (1.0 / fam.p)
        return np.where(m > 0.0, val, 0.0)
    # weighted
    if x is None:
        raise DomainError("weighted families need the spatial point x")
    r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    if np.any(r == 0.0):
        raise DomainError("weighted family is singular at x = 0")
    return r ** (fam.delta / fam.p) * norm_eval(fam.base, None, xi)


def grad_H(fam, x, xi):
    """grad_xi H(x, xi) for xi != 0 (closed forms for every kind)."""
    xi = np.asarray(xi, dtype=float)
    if np.any(np.linalg.norm(xi, axis=-1) == 0.0):
        raise DomainError("H is not differentiable at xi = 0")
    if fam.kind == "euclidean":
        return xi / np.linalg.norm(xi, axis=-1, keepdims=True)
    if fam.kind == "lp":
        return _lp_grad(xi, fam.s)
    if fam.kind == "quadratic":
        w = xi @ fam.A
        return w / _quad_norm(xi, fam.A)[..., None]
    if fam.kind == "mixed":
        hs = _lp_norm(xi, fam.s)[..., None]
        ha = _quad_norm(xi, fam.A)[..., None]
        h = norm_eval(fam, None, xi)[..., None]
        gs = _lp_grad(xi, fam.s)
        ga = (xi @ fam.A) / ha
        return (hs ** (fam.p - 1.0) * gs + ha ** (fam.p - 1.0) * ga) * h ** (1.0 - fam.p)
    # weighted
    if x is None:
        raise DomainError("weighted families need the spatial point x")
    r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    return r[..., None] ** (fam.delta / fam.p) * grad_H(fam.base, None, xi)


def operator_a(fam, x, xi):
    """The flux map a(x, xi) = H^(p-1) grad H and the value H^p.

    Returns a pair ``(a, hp)`` with ``a`` of shape ``(..., n)`` and ``hp``
    of shape ``(...,)``; ``a(x, 0) = 0`` by continuity.
    """
    xi = np.asarray(xi, dtype=float)
    hp_ = norm_eval(fam, x, xi)
    nz = np.linalg.norm(xi, axis=-1) > 0.0
    a = np.zeros_like(xi)
    if np.any(nz):
        sub = xi[nz] if xi.ndim > 1 else xi
        sub_x = None
        if x is not None:
            x_arr = np.broadcast_to(np.asarray(x, dtype=float), xi.shape)
            sub_x = x_arr[nz] if xi.ndim > 1 else x_arr
        g = grad_H(fam, sub_x, sub)
        hval = norm_eval(fam, sub_x, sub)
        if xi.ndim > 1:
            a[nz] = hval[..., None] ** (fam.p - 1.0) * g
        else:
            a = hval ** (fam.p - 1.0) * g
    return a, hp_ ** fam.p


# ---------------------------------------------------------------------------
# dual norm
# ---------------------------------------------------------------------------


def _dual_lp_exponent(s):
    return s / (s - 1.0)


def dual_norm(fam, x, y):
    """Dual norm H0(y) = sup_{xi != 0} y . xi / H(xi).

    Closed forms: euclidean is self dual, lp(s) dualizes to lp(s'), a
    quadratic form dualizes to its inverse.  The mixed kind is computed
    numerically (multistart projected ascent plus a Newton polish on the
    inverse duality map).  Weighted kinds are rejected.
    """
    if not fam.x_independent:
        raise UnsupportedKindError("dual norm is only defined for x-independent families")
    y = np.asarray(y, dtype=float)
    if fam.kind == "euclidean":
        return np.linalg.norm(y, axis=-1)
    if fam.kind == "lp":
        return _lp_norm(y, _dual_lp_exponent(fam.s))
    if fam.kind == "quadratic":
        return _quad_norm(y, fam.A_inv)
    # mixed: numeric
    if y.ndim == 1:
        h0, _ = _dual_numeric_single(fam, y)
        return h0
    h0, _ = dual_newton(fam, y)
    return h0


def grad_dual(fam, y):
    """grad H0(y); satisfies H(grad H0(y)) = 1 and y . grad H0(y) = H0(y)."""
    if not fam.x_independent:
        raise UnsupportedKindError("dual norm is only defined for x-independent families")
    y = np.asarray(y, dtype=float)
    if np.any(np.linalg.norm(y, axis=-1) == 0.0):
        raise DomainError("H0 is not differentiable at 0")
    if fam.kind == "euclidean":
        return y / np.linalg.norm(y, axis=-1, keepdims=True)
    if fam.kind == "lp":
        return _lp_grad(y, _dual_lp_exponent(fam.s))
    if fam.kind == "quadratic":
        w = y @ fam.A_inv
        return w / _quad_norm(y, fam.A_inv)[..., None]
    _, g = dual_newton(fam, np.atleast_2d(y))
    return g.reshape(y.shape)


# -- Newton solver on the inverse duality map -------------------------------
#
# The maximizer xi* of y.xi over {H = 1} satisfies m(xi) := H(xi) grad H(xi)
# = y after rescaling, and then H0(y) = H(xi*), grad H0(y) = xi*/H(xi*).
# m = grad(H^2/2) has an SPD (a.e.) Jacobian, so damped Newton converges
# quadratically from the euclidean start.


def _m_and_jac(fam, xi):
    """m(xi) = H grad H and its Jacobian, batched over rows of xi."""
    p = fam.p
    if fam.kind == "euclidean":
        m = xi
        J = np.broadcast_to(np.eye(fam.n), xi.shape[:-1] + (fam.n, fam.n)).copy()
        return m, J
    if fam.kind == "quadratic":
        m = xi @ fam.A
        J = np.broadcast_to(fam.A, xi.shape[:-1] + (fam.n, fam.n)).copy()
        return m, J
    if fam.kind == "lp":
        s = fam.s
        h = _lp_norm(xi, s)[..., None]
        g = _lp_grad(xi, s)
        m = h * g
        # Hess H = (s-1) [S^(1/s-1) diag(|xi|^(s-2)) - S^(1/s-2) a (x) a]
        Sa = np.abs(xi) ** (s - 2.0)
        a = np.sign(xi) * np.abs(xi) ** (s - 1.0)
        S = np.sum(np.abs(xi) ** s, axis=-1)[..., None, None]
        hess = (s - 1.0) * (
            S ** (1.0 / s - 1.0) * _diag_embed(Sa)
            - S ** (1.0 / s - 2.0) * a[..., :, None] * a[..., None, :]
        )
        J = g[..., :, None] * g[..., None, :] + h[..., None] * hess
        return m, J
    if fam.kind == "mixed":
        s = fam.s
        hs = _lp_norm(xi, s)[..., None]
        ha = _quad_norm(xi, fam.A)[..., None]
        h = norm_eval(fam, None, xi)[..., None]
        gs = _lp_grad(xi, s)
        ga = (xi @ fam.A) / ha
        G = hs ** (p - 1.0) * gs + ha ** (p - 1.0) * ga
        gH = h ** (1.0 - p) * G
        m = h * gH  # = h^(2-p) G
        # Hessians of the two building blocks
        Sa = np.abs(xi) ** (s - 2.0)
        a = np.sign(xi) * np.abs(xi) ** (s - 1.0)
        S = np.sum(np.abs(xi) ** s, axis=-1)[..., None, None]
        hess_s = (s - 1.0) * (
            S ** (1.0 / s - 1.0) * _diag_embed(Sa)
            - S ** (1.0 / s - 2.0) * a[..., :, None] * a[..., None, :]
        )
        Axi = xi @ fam.A
        hess_a = fam.A / ha[..., None] - Axi[..., :, None] * Axi[..., None, :] / ha[..., None] ** 3
        DG = (
            (p - 1.0) * hs[..., None] ** (p - 2.0) * gs[..., :, None] * gs[..., None, :]
            + hs[..., None] ** (p - 1.0) * hess_s
            + (p - 1.0) * ha[..., None] ** (p - 2.0) * ga[..., :, None] * ga[..., None, :]
            + ha[..., None] ** (p - 1.0) * hess_a
        )
        # m = h^(2-p) G,  Dm = (2-p) h^(1-p) gH (x) G + h^(2-p) DG
        J = (2.0 - p) * h[..., None] ** (1.0 - p) * gH[..., :, None] * G[..., None, :]
        J = J + h[..., None] ** (2.0 - p) * DG
        return m, J
    raise UnsupportedKindError(fam.kind)


def _diag_embed(d):
    out = np.zeros(d.shape + (d.shape[-1],))
    idx = np.arange(d.shape[-1])
    out[..., idx, idx] = d
    return out


def dual_newton(fam, Y, tol=1e-13, maxit=60):
    """Batched dual norm and gradient via Newton on m(xi) = y.

    Returns ``(H0, gradH0)`` for rows of ``Y``.  Falls back to projected
    ascent on rows where Newton stalls (degenerate Hessian directions).
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    norms = np.linalg.norm(Y, axis=-1)
    if np.any(norms == 0.0):
        raise DomainError("dual gradient undefined at 0")
    # scale-free start: direction of y, scaled so m(xi0) ~ y
    xi = Y / norms[..., None]
    m0, _ = _m_and_jac(fam, xi)
    scale = np.einsum("...i,...i->...", Y, m0) / np.einsum("...i,...i->...", m0, m0)
    xi = xi * scale[..., None]
    active = np.ones(Y.shape[0], dtype=bool)
    for _ in range(maxit):
        m, J = _m_and_jac(fam, xi)
        res = m - Y
        rn = np.linalg.norm(res, axis=-1) / norms
        active = rn > tol
        if not np.any(active):
            break
        step = np.zeros_like(xi)
        Ja = J[active]
        # Levenberg guard for (near-)singular Jacobians
        mu = 1e-14 * np.trace(Ja, axis1=-2, axis2=-1)[..., None, None]
        Ja = Ja + mu * np.eye(fam.n)
        step[active] = np.linalg.solve(Ja, res[active][..., None])[..., 0]
        # damped update: halve until the residual does not grow
        lam = np.ones(Y.shape[0])
        for _ in range(30):
            trial = xi - lam[..., None] * step
            mt, _ = _m_and_jac(fam, trial)
            rt = np.linalg.norm(mt - Y, axis=-1) / norms
            bad = active & (rt > rn)
            if not np.any(bad):
                break
            lam[bad] *= 0.5
        xi = xi - lam[..., None] * step
    h = norm_eval(fam, None, xi)
    return h, xi / h[..., None]


def _dual_numeric_single(fam, y, n_starts=64, seed=0, improve_tol=1e-12):
    """Scalar-path numeric dual: multistart projected gradient ascent + Newton polish.

    Maximizes ``y . xi`` over the H-unit sphere from the best of ``n_starts``
    seeded random starts, stopping a start when the step improvement drops
    below ``improve_tol``; the winner is polished by :func:`dual_newton`.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    n = fam.n
    starts = rng.standard_normal((n_starts, n))
    starts[0] = y / np.linalg.norm(y)
    starts /= norm_eval(fam, None, starts)[..., None]
    best = None
    for xi in starts:
        f = float(y @ xi)
        alpha = 1.0 / max(np.linalg.norm(y), 1e-300)
        for _ in range(500):
            trial = xi + alpha * y
            trial = trial / norm_eval(fam, None, trial)
            ft = float(y @ trial)
            if ft > f + improve_tol * (1.0 + abs(f)):
                xi, f = trial, ft
            else:
                alpha *= 0.5
                if alpha * np.linalg.norm(y) < 1e-16:
                    break
        if best is None or f > best[0]:
            best = (f, xi)
    # Newton polish; its own start is already in the attraction basin and the
    # multistart value lower-bounds the sup, so take the larger of the two.
    h0, g = dual_newton(fam, y)
    if best[0] > h0[0]:
        return float(best[0]), best[1] / norm_eval(fam, None, best[1])
    return float(h0[0]), g[0]


def bidual_norm(fam, xi_samples, n_dirs=2048, iters=80, seed=0):
    """Numeric bidual sup_y xi . y / H0(y) for each row of ``xi_samples``.

    Independent of the primal evaluator: it only calls the dual norm.  Used
    to certify the round trip ``H00 = H``.  Shared candidate directions are
    scored for all samples at once, then each sample is polished by
    projected gradient ascent (the gradient needs grad H0, available for
    every x-independent kind).
    """
    xi_samples = np.atleast_2d(np.asarray(xi_samples, dtype=float))
    rng = np.random.Generator(np.random.Philox(key=seed))
    dirs = rng.standard_normal((n_dirs, fam.n))
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    h0 = dual_norm(fam, None, dirs)
    scores = xi_samples @ dirs.T / h0[None, :]
    y = dirs[np.argmax(scores, axis=1)]
    y = y / dual_norm(fam, None, y)[..., None]
    val = np.einsum("ij,ij->i", xi_samples, y)
    step = 1.0 / np.maximum(np.linalg.norm(xi_samples, axis=-1), 1e-300)
    step = np.full(len(y), 1.0) * step
    for _ in range(iters):
        g0 = grad_dual(fam, y)
        grad = xi_samples - val[:, None] * g0   # gradient of xi.y on {H0 = 1}
        trial = y + step[:, None] * grad
        trial /= dual_norm(fam, None, trial)[..., None]
        tval = np.einsum("ij,ij->i", xi_samples, trial)
        better = tval > val
        y[better] = trial[better]
        val[better] = tval[better]
        step[~better] *= 0.5
    return val


# ---------------------------------------------------------------------------
# sampling helpers
# ---------------------------------------------------------------------------


def sample_vectors(n, count, seed, decades=3, stream=0):
    """Seeded random directions with log-uniform magnitudes 10^(-decades)..10^(decades)."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed), counter=[0, 0, 0, stream]))
    d = rng.standard_normal((count, n))
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    mag = 10.0 ** rng.uniform(-decades, decades, size=count)
    return d * mag[:, None]


def equivalence_report(fam, n_samples=4096, seed=11, x_radius=(0.5, 2.0)):
    """Empirical kappa, nu with kappa |xi| <= H(x, xi) <= nu |xi| on sampled directions.

    The constants are reported over samples (the underlying local bounds are
    asserted to exist, not quantified); for the weighted kind, x ranges over
    the given radius interval.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    d = rng.standard_normal((n_samples, fam.n))
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    x = None
    if not fam.x_independent:
        xd = rng.standard_normal((n_samples, fam.n))
        xd /= np.linalg.norm(xd, axis=-1, keepdims=True)
        r = np.exp(rng.uniform(np.log(x_radius[0]), np.log(x_radius[1]), n_samples))
        x = xd * r[:, None]
    h = norm_eval(fam, x, d)
    return float(h.min()), float(h.max())
