import math

import numpy as np
import pytest

from finslerhardy import fields, norms, quadrature
from finslerhardy.errors import MarginError, PoisonedIntegrandError

import oracles


def test_constant_integrand_volumes():
    s2 = quadrature.annulus_scheme(1.0, 2.0, 2, n_r=128, n_ang=32)
    assert s2.volume == pytest.approx(3.0 * math.pi, rel=1e-8)
    s3 = quadrature.annulus_scheme(1.0, 2.0, 3, n_r=128, n_ang=16)
    assert s3.volume == pytest.approx(4.0 * math.pi / 3.0 * 7.0, rel=1e-8)


def test_polar_integrals():
    s = quadrature.annulus_scheme(1.0, math.e, 2, n_r=128, n_ang=16)
    val = quadrature.integrate(s, lambda x: 1.0 / np.einsum("ij,ij->i", x, x))
    assert val == pytest.approx(2.0 * math.pi, rel=1e-10)
    s3 = quadrature.annulus_scheme(1.0, 2.0, 3, n_r=128, n_ang=16)
    val3 = quadrature.integrate(s3, lambda x: np.linalg.norm(x, axis=1) ** -3.0)
    assert val3 == pytest.approx(4.0 * math.pi * math.log(2.0), rel=1e-10)


def test_radial_scheme_agrees_with_full():
    rs = quadrature.radial_scheme(1.0, 2.0, 3, n_r=256)
    val = quadrature.integrate(rs, lambda x: np.linalg.norm(x, axis=1) ** -3.0)
    assert val == pytest.approx(4.0 * math.pi * math.log(2.0), rel=1e-11)


def test_dual_metric_shell_volume():
    # dual of lp(4) is lp(4/3); 2D lp(q) ball area = 4 G(1+1/q)^2 / G(1+2/q)
    fam = norms.lp(4, 2.0, 2)
    V0 = quadrature.unit_ball_volume(fam=fam, metric="dual", n_ang=512)
    q = 4.0 / 3.0
    exact = 4.0 * math.gamma(1 + 1 / q) ** 2 / math.gamma(1 + 2 / q)
    assert V0 == pytest.approx(exact, rel=5e-4)
    sd = quadrature.annulus_scheme(1.0, 2.0, 2, fam=fam, metric="dual", n_ang=512)
    assert sd.volume == pytest.approx(3.0 * V0, rel=1e-10)


def test_richardson_order_radial():
    vals = []
    for n_r in (8, 16, 32):
        s = quadrature.annulus_scheme(1.0, 4.0, 2, n_r=n_r, n_ang=16, order=2)
        vals.append(quadrature.integrate(
            s, lambda x: np.exp(-np.linalg.norm(x, axis=1))))
    e1 = abs(vals[0] - vals[2])
    e2 = abs(vals[1] - vals[2])
    order = math.log2(e1 / e2)
    assert order >= 1.9


def test_poisoned_integrand_names_node():
    s = quadrature.annulus_scheme(1.0, 2.0, 2, n_r=16, n_ang=8)

    def bad(x):
        out = np.ones(len(x))
        out[3] = np.nan
        return out

    with pytest.raises(PoisonedIntegrandError) as exc:
        quadrature.integrate(s, bad)
    assert exc.value.node is not None


def test_energy_breakdown_and_scaling():
    fam = norms.euclidean(2.0, 3)
    s = quadrature.annulus_scheme(0.5, 4.0, 3, n_r=256, n_ang=16)
    bump = fields.Bump(np.array([0.0, 0.0, 1.5]), 0.5, 1.0)
    eb = quadrature.energy(s, fam, bump, V=lambda x: np.ones(len(x)))
    assert eb.total == pytest.approx(eb.dirichlet + eb.potential, rel=1e-12)
    big = fields.Bump(np.array([0.0, 0.0, 1.5]), 0.5, 2.0)
    eb2 = quadrature.energy(s, fam, big)
    assert eb2.dirichlet == pytest.approx(2.0 ** fam.p * eb.dirichlet, rel=1e-10)


def test_energy_margin_error():
    fam = norms.euclidean(2.0, 3)
    s = quadrature.annulus_scheme(0.5, 2.0, 3, n_r=64, n_ang=8)
    touching = fields.Bump(np.array([0.0, 0.0, 1.5]), 0.6, 1.0)
    with pytest.raises(MarginError):
        quadrature.energy(s, fam, touching, margin=0.0)


def test_radial_hat_energy_against_1d_oracle():
    # smooth radial test function: compare the full 3D quadrature with the
    # adaptive 1D oracle int |phi'(r)|^p r^(n-1) dr times the sphere area
    fam = norms.euclidean(2.0, 3)
    c, rho = 2.0, 0.8

    def prof(r):
        z = (np.asarray(r, dtype=float) - c) / rho
        out = np.zeros_like(z)
        inside = np.abs(z) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
        return out

    def dprof(r):
        z = (np.asarray(r, dtype=float) - c) / rho
        out = np.zeros_like(z)
        inside = np.abs(z) < 1.0
        val = np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
        out[inside] = val * (-2.0 * z[inside] / (1.0 - z[inside] ** 2) ** 2) / rho
        return out

    hat = fields.RadialProfileField(prof, dprof, metric="euclidean")
    s = quadrature.annulus_scheme(0.5, 4.0, 3, n_r=512, n_ang=16,
                                  align=(c - rho, c + rho))
    eb = quadrature.energy(s, fam, hat)
    oracle = oracles.radial_energy_1d(lambda r: float(dprof(np.asarray([r]))[0]),
                                      2.0, 3, c - rho, c + rho)
    assert eb.dirichlet == pytest.approx(oracle, rel=1e-6)
    # constant plateau region contributes nothing to the Dirichlet part
    plateau = fields.RadialProfileField(lambda r: np.ones_like(np.asarray(r)),
                                        lambda r: np.zeros_like(np.asarray(r)),
                                        metric="euclidean")
    assert quadrature.energy(s, fam, plateau).dirichlet == 0.0


def test_hardy_ratio_classical():
    # euclidean p=2, n=3 with the sharp weight |x|^-2/4: ratio >= 1
    fam = norms.euclidean(2.0, 3)
    s = quadrature.annulus_scheme(0.1, 10.0, 3, n_r=512, n_ang=16)
    bump = fields.Bump(np.array([0.0, 0.0, 2.0]), 1.0, 1.0)

    def W(x):
        return 0.25 * np.linalg.norm(x, axis=1) ** -2.0

    ratio = quadrature.hardy_ratio(s, fam, bump, None, W)
    assert ratio >= 1.0 - 1e-6
    ratio2 = quadrature.hardy_ratio(s, fam, bump, None,
                                    lambda x: 2.0 * W(x))
    assert ratio2 == pytest.approx(ratio / 2.0, rel=1e-12)


def test_integrand_rows_export():
    from finslerhardy.report import rows_to_csv

    s = quadrature.annulus_scheme(1.0, 2.0, 2, n_r=8, n_ang=4, order=2)
    rows = quadrature.integrand_rows(s, lambda x: np.linalg.norm(x, axis=1))
    assert len(rows) == len(s.weights)
    assert len(rows[0]) == 2 + 2              # x, y, weight, value
    text = rows_to_csv(["x", "y", "w", "f"], rows)
    assert text.splitlines()[0] == "x,y,w,f"


def test_hardy_ratio_zero_denominator():
    fam = norms.euclidean(2.0, 3)
    s = quadrature.annulus_scheme(0.1, 10.0, 3, n_r=64, n_ang=8)
    bump = fields.Bump(np.array([0.0, 0.0, 2.0]), 0.5, 1.0)
    with pytest.raises(ValueError):
        quadrature.hardy_ratio(s, fam, bump, None, lambda x: np.zeros(len(x)))


def test_disjoint_support_additivity():
    fam = norms.euclidean(2.0, 3)
    s = quadrature.annulus_scheme(0.5, 8.0, 3, n_r=512, n_ang=16)
    b1 = fields.Bump(np.array([0.0, 0.0, 1.5]), 0.4, 1.0)
    b2 = fields.Bump(np.array([0.0, 0.0, 5.0]), 0.8, 1.0)

    class Sum(fields.ScalarField):
        support = (b1.support[0], b2.support[1])

        def __call__(self, x):
            return b1(x) + b2(x)

        def grad(self, x):
            return b1.grad(x) + b2.grad(x)

    e12 = quadrature.energy(s, fam, Sum()).dirichlet
    e1 = quadrature.energy(s, fam, b1).dirichlet
    e2 = quadrature.energy(s, fam, b2).dirichlet
    assert e12 == pytest.approx(e1 + e2, rel=1e-10)
