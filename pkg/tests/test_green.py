import json
import math

import numpy as np
import pytest

from finslerhardy import fields, green, hardy, norms
from finslerhardy.errors import BranchError
from finslerhardy.norms import GlobalParams

import oracles


def newtonian_problem(cells=2048, R=100.0):
    return green.RadialProblem(p=2.0, n=3,
                               phi=green.BumpDensity(0.5, 1.0, 1.0, 3),
                               R_out=R, n_cells=cells)


def test_newtonian_far_field():
    gp = green.solve_green(newtonian_problem())
    assert gp.residual <= 1e-8
    beta, A, B = green.farfield_exponent(gp)
    assert beta == pytest.approx(-1.0, abs=0.02)
    assert A == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-3)
    # pointwise far field m/(4 pi r)
    rr = np.geomspace(3.0, 10.0, 32)
    assert np.abs(gp.profile(rr) * 4.0 * math.pi * rr - 1.0).max() < 1e-3


@pytest.mark.parametrize("p", [1.5, 2.5])
def test_far_field_exponent_vs_shooting_oracle(p):
    prob = green.RadialProblem(p=p, n=3,
                               phi=green.BumpDensity(0.5, 1.0, 1.0, 3),
                               R_out=50.0 if p < 2 else 200.0, n_cells=2048)
    gp = green.solve_green(prob)
    beta, _, _ = green.farfield_exponent(gp)
    expect = (p - 3.0) / (p - 1.0)
    assert beta == pytest.approx(expect, abs=0.02)
    # independent shooting solution agrees pointwise on the bulk
    u0, sol = oracles.shoot_green(prob)
    rr = np.geomspace(prob.r_min * 2.0, 2.5, 60)
    ours = gp.profile(rr)
    theirs = sol.sol(rr)[0]
    assert np.abs(ours / theirs - 1.0).max() < 2e-3


def test_flux_identity_and_bounds():
    gp = green.solve_green(newtonian_problem())
    fb = green.flux_bound_check(gp)
    assert fb["worst_identity_rel_err"] <= 0.01
    assert fb["upper_ok"] and fb["floor_ok"]
    assert fb["C0"] >= 1.0 - 1e-9      # max(int phi, 1/int phi) with mass 1
    # V = 0: flux equals the density mass at every level below supp phi
    t = fb["M_phi"] * 0.25
    assert green.level_flux(gp, t) == pytest.approx(1.0, rel=1e-3)


def test_negative_potential_raises_solution():
    phi = green.BumpDensity(0.5, 1.0, 1.0, 3)
    V = green.bump_potential(0.5, 1.5, 0.05)
    gp0 = green.solve_green(green.RadialProblem(p=2.0, n=3, phi=phi,
                                                R_out=100.0, n_cells=2048))
    gpV = green.solve_green(green.RadialProblem(p=2.0, n=3, phi=phi, V=V,
                                                R_out=100.0, n_cells=2048))
    rr = np.geomspace(gp0.r[0] * 1.01, 50.0, 200)
    assert np.all(gpV.profile(rr) >= gp0.profile(rr) * (1.0 - 1e-10))
    fb = green.flux_bound_check(gpV)
    assert fb["upper_ok"] and fb["floor_ok"]
    # V <= 0: flux at low levels exceeds the density mass
    t = fb["M_phi"] * 0.25
    assert green.level_flux(gpV, t) >= 1.0


def test_monotone_decay_outside_support():
    gp = green.solve_green(newtonian_problem())
    rr = np.geomspace(1.0, gp.r[-1] * 0.999, 400)
    u = gp.profile(rr)
    assert np.all(np.diff(u) < 0.0)


def test_mesh_refinement_order():
    phi = green.BumpDensity(0.5, 1.0, 1.0, 3)
    probs = [green.RadialProblem(p=1.5, n=3, phi=phi, R_out=50.0, n_cells=c)
             for c in (512, 1024, 4096)]
    g1, g2, g3 = (green.solve_green(pr) for pr in probs)
    rr = np.geomspace(0.02, 25.0, 300)
    e1 = np.max(np.abs(g1.profile(rr) - g3.profile(rr)) / g3.profile(rr))
    e2 = np.max(np.abs(g2.profile(rr) - g3.profile(rr)) / g3.profile(rr))
    assert e1 / e2 >= 3.5


def test_truncation_stability():
    phi = green.BumpDensity(0.5, 1.0, 1.0, 3)
    for p in (2.0, 1.5):
        ts = green.truncation_stability(
            green.RadialProblem(p=p, n=3, phi=phi, R_out=50.0, n_cells=1024))
        assert ts <= 1e-3


def test_problem_file_round_trip(tmp_path):
    spec = {"p": 2.0, "n": 3, "V": {"type": "bump", "r_a": 0.5, "r_b": 1.5,
                                    "depth": 0.05},
            "phi": {"r_a": 0.5, "r_b": 1.0, "mass": 1.0},
            "R_out": 80.0, "mesh": 1024}
    path = tmp_path / "problem.json"
    path.write_text(json.dumps(spec))
    prob = green.load_problem(str(path))
    assert prob.p == 2.0 and prob.n == 3 and prob.V is not None
    gp = green.solve_green(prob)
    assert gp.residual <= 1e-8


def test_green_weight_hypotheses_and_residual():
    phi = green.BumpDensity(0.5, 1.0, 1.0, 3)
    V = green.bump_potential(0.5, 1.5, 0.05)
    prob = green.RadialProblem(p=2.0, n=3, phi=phi, V=V, R_out=200.0,
                               n_cells=4096)
    gp = green.solve_green(prob)
    fam = norms.euclidean(2.0, 3)
    hw = hardy.build_weight_green(fam, GlobalParams(2, 3), gp, V, prob.phi)
    assert hw.hypotheses["V_nonpositive"]
    assert np.isfinite(hw.hypotheses["abs_potential_integral"])
    dom = fields.annulus(0.1, 25.0, 3)

    def VmW(x):
        return hw.potential(x) - hw.weight(x)

    res = fields.weak_residual(fam, hw.ground_state, dom, V=VmW,
                               n_tests=30, seed=11)
    assert res <= 1e-5
    # off the density support the weight reduces to the gradient term, and on
    # it the density term is a pointwise lower bound
    rr = np.geomspace(1.5, 20.0, 50)
    W = hw.weight_profile(rr)
    grad_term = ((2 - 1) / 2) ** 2 * np.abs(gp.dprofile(rr)) ** 2 / gp.profile(rr) ** 2
    assert np.abs(W / grad_term - 1.0).max() < 1e-12
    rs = np.linspace(0.55, 0.95, 20)
    c2 = 0.5  # ((p-1)/p)^(p-1) for p = 2
    lower = c2 * gp.profile(rs) ** (1.0 - 2.0) * prob.phi(rs)
    assert np.all(hw.weight_profile(rs) >= lower - 1e-14)


def test_green_weight_sign_hypothesis_rejects():
    phi = green.BumpDensity(0.5, 1.0, 1.0, 3)

    def Vpos(r):
        return np.abs(green.bump_potential(0.5, 1.5, 0.05)(r))

    prob = green.RadialProblem(p=2.0, n=3, phi=phi, V=Vpos, R_out=100.0,
                               n_cells=1024)
    gp = green.solve_green(prob)
    with pytest.raises(BranchError):
        hardy.build_weight_green(norms.euclidean(2.0, 3), GlobalParams(2, 3),
                                 gp, Vpos, prob.phi)
