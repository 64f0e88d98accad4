import math

import numpy as np
import pytest

from finslerhardy import eigen

import oracles


def test_p2_classical_values():
    ep = eigen.EigenProblem(p=2.0, L=1.0, N=4096)
    pr = eigen.principal_eigenvalue(ep, restarts=6)
    assert pr.lam == pytest.approx(math.pi ** 2, rel=1e-3)
    assert pr.residual <= 1e-7
    assert pr.sign_changes == 0
    assert pr.restarts_agreeing == 6
    s2 = eigen.second_eigenvalue_and_gap(eigen.EigenProblem(p=2.0, L=1.0, N=2048))
    assert s2["lambda2"] == pytest.approx(4.0 * math.pi ** 2, rel=5e-3)
    assert s2["gap"] == pytest.approx(3.0 * math.pi ** 2, rel=5e-3)
    assert s2["sign_changes"] == 1


def test_p3_against_formula_and_shooting():
    ep = eigen.EigenProblem(p=3.0, L=1.0, N=4096)
    pr = eigen.principal_eigenvalue(ep, restarts=6)
    lam_formula = 2.0 * eigen.p_sine_constant(3.0) ** 3
    assert pr.lam == pytest.approx(lam_formula, rel=1e-3)
    lam_shoot = oracles.shoot_eigen(3.0, 1.0, count_zero=0)
    assert pr.lam == pytest.approx(lam_shoot, rel=1e-3)
    s3 = eigen.second_eigenvalue_and_gap(eigen.EigenProblem(p=3.0, L=1.0, N=2048))
    lam2_shoot = oracles.shoot_eigen(3.0, 1.0, count_zero=1)
    assert s3["lambda2"] == pytest.approx(lam2_shoot, rel=1e-2)


def test_shooting_oracle_self_check():
    # the oracle reproduces pi^2 and 4 pi^2 for p = 2
    assert oracles.shoot_eigen(2.0, 1.0, count_zero=0) == pytest.approx(
        math.pi ** 2, rel=1e-8)
    assert oracles.shoot_eigen(2.0, 1.0, count_zero=1) == pytest.approx(
        4.0 * math.pi ** 2, rel=1e-8)


def test_potential_shooting_cross_check():
    def V(x):
        return 3.0 * np.sin(2.0 * math.pi * np.asarray(x, dtype=float))

    pr = eigen.principal_eigenvalue(eigen.EigenProblem(p=2.0, L=1.0, V=V, N=2048),
                                    restarts=6)
    lam_shoot = oracles.shoot_eigen(2.0, 1.0, V=V, count_zero=0)
    assert pr.lam == pytest.approx(lam_shoot, rel=1e-4)


def test_constant_shift_identity():
    pr0 = eigen.principal_eigenvalue(eigen.EigenProblem(p=2.5, L=1.0, N=1024),
                                     restarts=4)
    prc = eigen.principal_eigenvalue(
        eigen.EigenProblem(p=2.5, L=1.0,
                           V=lambda x: np.full_like(np.asarray(x, dtype=float), 1.7),
                           N=1024, seed=0), restarts=4)
    assert abs(prc.lam - pr0.lam - 1.7) <= 1e-8


def test_scaling_invariance_of_quotient():
    ep = eigen.EigenProblem(p=3.0, L=1.0, N=512)
    pr = eigen.principal_eigenvalue(ep, restarts=4)
    disc = eigen._disc_for(ep)
    assert disc.rayleigh(2.0 * pr.v) == pytest.approx(pr.lam, rel=1e-12)


def test_normalization_and_rayleigh_consistency():
    ep = eigen.EigenProblem(p=2.0, L=1.0, N=1024)
    pr = eigen.principal_eigenvalue(ep, restarts=4)
    h = ep.L / ep.N
    assert (h * np.sum(np.abs(pr.v) ** ep.p)) ** (1.0 / ep.p) == pytest.approx(
        1.0, abs=1e-10)
    assert abs(pr.rayleigh / pr.lam - 1.0) <= 1e-9


def test_gap_positive_random_potentials():
    rng = np.random.default_rng(3)
    for _ in range(3):
        c = rng.uniform(-3.0, 3.0, 4)

        def V(x, c=c):
            x = np.asarray(x, dtype=float)
            return sum(ci * np.cos((i + 1) * math.pi * x) for i, ci in enumerate(c))

        g = eigen.second_eigenvalue_and_gap(
            eigen.EigenProblem(p=2.0, L=1.0, V=V, N=512), restarts=2, xtol=1e-7)
        assert g["gap"] > 0.0


def test_ball_p2_classical_values():
    # radial Dirichlet Laplacian on the unit ball: lambda_k = (k pi)^2 in 3D
    prb = eigen.principal_eigenvalue(
        eigen.EigenProblem(p=2.0, L=1.0, N=2048, geometry="ball", n=3),
        restarts=4)
    assert prb.lam == pytest.approx(math.pi ** 2, rel=1e-6)
    assert prb.sign_changes == 0
    s2 = eigen.second_eigenvalue_and_gap(
        eigen.EigenProblem(p=2.0, L=1.0, N=1024, geometry="ball", n=3),
        restarts=3, xtol=1e-7)
    assert s2["lambda2"] == pytest.approx(4.0 * math.pi ** 2, rel=1e-4)
    # eigenfunction is sin(pi r)/r up to normalization
    x = np.linspace(0.0, 1.0, 2049)[:-1]
    prof = np.where(x > 0, np.sin(math.pi * np.maximum(x, 1e-12))
                    / np.maximum(x, 1e-12), math.pi)
    disc = eigen._disc_for(eigen.EigenProblem(p=2.0, L=1.0, N=2048,
                                              geometry="ball", n=3))
    prof = prof / disc.norm_p(prof)
    assert np.max(np.abs(prb.v - prof)) < 1e-5


def test_ball_p2_2d_bessel():
    from scipy.special import jn_zeros

    prb = eigen.principal_eigenvalue(
        eigen.EigenProblem(p=2.0, L=1.0, N=2048, geometry="ball", n=2),
        restarts=4)
    assert prb.lam == pytest.approx(float(jn_zeros(0, 1)[0]) ** 2, rel=1e-6)


def test_ball_p3_against_shooting():
    from scipy.optimize import brentq

    prb = eigen.principal_eigenvalue(
        eigen.EigenProblem(p=3.0, L=1.0, N=2048, geometry="ball", n=3),
        restarts=4)
    lam_sh = brentq(lambda lam: oracles.shoot_eigen_ball(3.0, 3, lam),
                    prb.lam * 0.5, prb.lam * 1.5, xtol=1e-10)
    assert prb.lam == pytest.approx(lam_sh, rel=1e-5)


def test_convergence_probe():
    probe = eigen.eigenpair_convergence_probe(
        eigen.EigenProblem(p=2.0, L=1.0,
                           V=lambda x: 1.5 * np.sin(2 * math.pi * np.asarray(x)),
                           N=512), k_list=(2, 4, 8), restarts=4)
    assert all(r["shift_err"] <= 1e-8 for r in probe["shift"])
    dists = [r["dist"] for r in probe["relative"]]
    assert dists[0] > dists[1] > dists[2]
    assert all(abs(r["norm"] - 1.0) <= 1e-10
               for r in probe["shift"] + probe["relative"])
