import math

import pytest

import canard_py as c


def test_trichotomy():
    b = 0.01
    kinds = sorted(s["kind"] for s in c.folded_singularities(c.ModelParams(1 + b / 2, b, 0.01, 0.01)))
    assert kinds == ["FoldedNode", "FoldedSaddle"]
    fsn = c.folded_singularities(c.ModelParams(1 + b, b, 0.01, 0.01))
    assert [s["kind"] for s in fsn] == ["FSN_I"]
    assert c.folded_singularities(c.ModelParams(1 + 1.5 * b, b, 0.01, 0.01)) == []


def test_fold_curve_theory_without_forcing():
    lo, hi = c.fold_curve_theory(0.0, 0.3, 0.01)
    assert lo == pytest.approx(1 - 0.01 / 8)
    assert hi == pytest.approx(1 - 0.01 / 8)


def test_melnikov_oracle():
    q, closed = c.melnikov_d1_fsn(0.3, 1.0, 0.0, 1.0, 0.0)
    assert abs(q - closed) <= 1e-8 * abs(closed)


def test_torus_point_without_forcing():
    r = c.torus_bifurcation(0.0, 1.0, 0.01)
    assert abs(r["a_tb"] - 1.0) < 1e-8
    assert r["product_trace_error"] < 1e-6


def test_normal_form_determinant():
    lambdas, det = c.normal_form_lambdas(0.3, 0.0, 1)
    assert max(abs(x) for x in lambdas) < 1e-9
    assert det == pytest.approx(4 * math.pi**2, abs=1e-6)


def test_simulate_shape_and_class():
    p = c.ModelParams(1.01, 0.01, 0.01, 0.01)
    traj = c.simulate(p, 5.0)
    assert traj.shape[1] == 4
    assert traj[0, 0] == 0.0 and traj[-1, 0] == pytest.approx(5.0)
    assert c.classify_attractor(p) == "SAO"


def test_errors_surface_as_exceptions():
    with pytest.raises(c.CanardError):
        c.torus_bifurcation(0.01, 0.1, 0.01)
    with pytest.raises(c.CanardError):
        c.ModelParams(1.0, -0.1, 1.0, 0.01)
