import json
import math

import numpy as np
import pytest

from chebdde.errors import ConvergenceError, UnknownSymbolError
from chebdde.model import (
    bilinear_form,
    blowflies,
    equilibrium_solve,
    fluidflow,
    get_model,
    linearize,
    load_model,
    make_model,
    trilinear_form,
)


def test_make_model_validation():
    with pytest.raises(ValueError):
        make_model(1, (0.5, 1.0), ("x0@0",))
    with pytest.raises(ValueError):
        make_model(1, (0.0, 0.7, 0.3), ("x0@0",))
    with pytest.raises(ValueError):
        make_model(1, (0.0, 1.5), ("x0@0",))
    with pytest.raises(UnknownSymbolError):
        make_model(1, (0.0, 1.0), ("x1@0",))
    with pytest.raises(UnknownSymbolError):
        make_model(1, (0.0, 1.0), ("x0@2",))
    with pytest.raises(UnknownSymbolError):
        make_model(1, (0.0, 1.0), ("a*x0@0",))
    with pytest.raises(ValueError):
        make_model(2, (0.0, 1.0), ("x0@0",))


def test_blowflies_equilibrium():
    model = blowflies(mu=3.0, beta=30.0)
    xbar = equilibrium_solve(model)
    assert abs(xbar[0] - math.log(10.0)) < 1e-12
    # trivial equilibrium reachable from the origin guess
    zero = equilibrium_solve(model, guess=[0.0])
    assert zero[0] == 0.0
    # Newton from a displaced guess lands on the same positive root
    moved = equilibrium_solve(model, guess=[2.0])
    assert abs(moved[0] - math.log(10.0)) < 1e-12


def test_fluidflow_equilibrium():
    model = fluidflow(k=1.5, c=1.5)
    xbar = equilibrium_solve(model)
    assert abs(xbar[0] - 1.5) < 1e-12
    assert abs(xbar[1] - 0.5925925925925926) < 1e-12
    moved = equilibrium_solve(model, guess=[1.4, 0.5])
    assert np.max(np.abs(moved - xbar)) < 1e-10


def test_equilibrium_no_root():
    # x^2 + 1 has no real root; Newton wanders chaotically and must give up
    model = make_model(1, (0.0,), ("x0@0^2 + 1",))
    with pytest.raises(ConvergenceError):
        equilibrium_solve(model, guess=[0.7])


def test_equilibrium_singular_jacobian():
    model = make_model(1, (0.0,), ("x0@0^2 + 1",))
    with pytest.raises(ConvergenceError):
        equilibrium_solve(model, guess=[0.0])


def test_equilibrium_guess_shape():
    with pytest.raises(ValueError):
        equilibrium_solve(fluidflow(), guess=[1.0])


def test_linearize_blowflies():
    mu, beta = 3.0, 30.0
    model = blowflies(mu=mu, beta=beta)
    xbar = equilibrium_solve(model)
    lin = linearize(model, xbar)
    nbar = math.log(beta / mu)
    assert abs(lin.mats[0][0, 0] - (-mu)) < 1e-13
    assert abs(lin.mats[1][0, 0] - mu * (1.0 - nbar)) < 1e-12
    assert lin.delays == (0.0, 1.0)


def test_linearize_linear_model_exact():
    model = make_model(
        2,
        (0.0, 1.0),
        ("1.25*x0@0 - 0.5*x1@1", "2*x0@1 + 3*x1@0"),
    )
    lin = linearize(model, np.zeros(2))
    assert lin.mats[0][0, 0] == 1.25
    assert lin.mats[0][1, 1] == 3.0
    assert lin.mats[1][0, 1] == -0.5
    assert lin.mats[1][1, 0] == 2.0
    assert lin.mats[0][0, 1] == 0.0 and lin.mats[1][0, 0] == 0.0


def test_linearize_fluidflow():
    k, c = 1.5, 1.5
    model = fluidflow(k=k, c=c)
    xbar = equilibrium_solve(model)
    lin = linearize(model, xbar)
    c0 = np.array([[-1.0 / c, -k * c * c / 2.0], [1.0, 0.0]])
    c1 = np.array([[-1.0 / c, 0.0], [0.0, 0.0]])
    assert np.max(np.abs(lin.mats[0] - c0)) < 1e-13
    assert np.max(np.abs(lin.mats[1] - c1)) < 1e-13
    assert abs(lin.mats[0][0, 1] - (-1.6875)) < 1e-15


def test_with_params():
    model = blowflies(mu=3.0, beta=30.0)
    bumped = model.with_params(beta=60.0)
    assert bumped.params["beta"] == 60.0
    assert bumped.params["mu"] == 3.0
    assert abs(bumped.equilibrium_hint[0] - math.log(20.0)) < 1e-15
    with pytest.raises(UnknownSymbolError):
        model.with_params(gamma=1.0)


def test_model_file_round_trip(tmp_path):
    doc = {
        "dim": 2,
        "delays": [0.0, 0.25, 1.0],
        "rhs": ["-x0@0 + x1@2", "x0@1 - x1@0^2"],
        "params": {},
        "equilibrium_hint": [0.0, 0.0],
    }
    path = tmp_path / "model.json"
    path.write_text(json.dumps(doc))
    model = load_model(str(path))
    assert model.dim == 2
    assert model.delays == (0.0, 0.25, 1.0)
    assert model.rhs_text() == ["-x0@0 + x1@2", "x0@1 - x1@0^2"]
    assert model.equilibrium_hint == (0.0, 0.0)


def test_model_file_unknown_key(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(json.dumps({"dim": 1, "delays": [0.0], "rhs": ["x0@0"], "tau": 2}))
    with pytest.raises(ValueError):
        load_model(str(path))


def test_get_model_builtins():
    assert get_model("blowflies").dim == 1
    assert get_model("fluidflow").dim == 2


def test_blowflies_higher_derivatives():
    # second and third derivatives of the delayed-birth nonlinearity at the
    # equilibrium, in terms of the linearization coefficients
    mu, beta = 3.0, 30.0
    model = blowflies(mu=mu, beta=beta)
    xbar = equilibrium_solve(model)
    lin = linearize(model, xbar)
    b1 = lin.mats[0][0, 0]
    b2 = lin.mats[1][0, 0]
    e1 = {(0, 1): 1.0}
    d2 = bilinear_form(model, xbar, e1, e1)[0]
    d3 = trilinear_form(model, xbar, e1, e1, e1)[0]
    assert abs(d2 - (b1 - b2)) < 1e-11
    assert abs(d3 - (-2.0 * b1 + b2)) < 1e-11


def test_fluidflow_trilinear_mixed():
    model = fluidflow(k=1.5, c=1.5)
    xbar = equilibrium_solve(model)
    u = {(0, 0): 1.0}  # w(t)
    v = {(0, 1): 1.0}  # w(t-1)
    w = {(1, 0): 1.0}  # q(t)
    d3 = trilinear_form(model, xbar, u, v, w)
    assert abs(d3[0] - (-0.75)) < 1e-12
    assert abs(d3[1]) < 1e-14


def test_bilinear_complex_directions():
    model = blowflies(mu=3.0, beta=30.0)
    xbar = equilibrium_solve(model)
    p = {(0, 0): 1.0, (0, 1): 0.3 - 0.9j}
    q = {(0, 0): 1.0, (0, 1): 0.3 + 0.9j}
    val = bilinear_form(model, xbar, p, q)[0]
    # only the lag-1 slot is nonlinear, so the form factors through it
    lin = linearize(model, xbar)
    d2 = lin.mats[0][0, 0] - lin.mats[1][0, 0]
    want = d2 * (0.3 - 0.9j) * (0.3 + 0.9j)
    assert abs(val - want) < 1e-11 * (1.0 + abs(want))
