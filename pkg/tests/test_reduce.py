"""Grid operator, tangent geometry, transverse solves, window scans."""

import math

import numpy as np
import pytest

from cryamabe.bubbles import BubbleParams, bubble_field, tangent_basis
from cryamabe.bubbles import BASIS_NAMES
from cryamabe.deform import GluingSpec, glued_deformation, zero_deformation
from cryamabe.errors import ConfigError
from cryamabe.heis import HPoint
from cryamabe.reduce import (
    GRADIENT_PAIRING,
    GRAM_SCALING_WEIGHTS,
    GridField,
    GridSpec,
    J_FLAT,
    PoissonOperator,
    ScanWindow,
    functional_gradient,
    functional_value,
    gram_matrix,
    project_E,
    scan_window,
    solve_poisson,
)

J4 = 4.0 * math.pi ** 2


# -- grid geometry -------------------------------------------------------

def test_gridspec_spacings_and_axes():
    g = GridSpec(4.0, 25, 25, 19)
    assert g.t_half_width == 4.0
    assert g.shape == (25, 25, 19)
    assert g.size == 25 * 25 * 19
    assert g.hx == pytest.approx(8.0 / 26)
    assert g.ht == pytest.approx(8.0 / 20)
    ax = g.axis(g.nx, g.hx)
    assert ax[0] == pytest.approx(-4.0 + g.hx)
    assert ax[-1] == pytest.approx(4.0 - g.hx)


def test_gridspec_split_box():
    g = GridSpec(3.0, 11, 11, 9, half_width_t=5.0)
    assert g.t_half_width == 5.0
    assert g.ht == pytest.approx(10.0 / 10)
    pts = g.points()
    assert np.max(np.abs(pts[:, 2])) == pytest.approx(5.0 - g.ht)
    assert np.max(np.abs(pts[:, 0])) == pytest.approx(3.0 - g.hx)


def test_gridspec_points_order():
    g = GridSpec(2.0, 3, 4, 5)
    pts = g.points()
    assert pts.shape == (60, 3)
    # x-major: t varies fastest, then y
    assert pts[1, 2] != pts[0, 2]
    assert pts[1, 0] == pts[0, 0] and pts[1, 1] == pts[0, 1]
    assert pts[5, 1] != pts[0, 1] and pts[5, 0] == pts[0, 0]


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(-1.0, 5, 5, 5)
    with pytest.raises(ValueError):
        GridSpec(1.0, 2, 5, 5)
    with pytest.raises(ValueError):
        GridSpec(1.0, 5, 5, 5, half_width_t=0.0)


def test_gridfield_validation_and_cube():
    g = GridSpec(2.0, 3, 3, 3)
    with pytest.raises(ValueError):
        GridField(g, np.zeros(26))
    f = GridField(g, np.arange(27, dtype=float))
    assert f.cube().shape == (3, 3, 3)
    assert f.cube()[0, 0, 1] == 1.0


# -- discrete operator ---------------------------------------------------

def test_operator_symmetric(small_solver):
    M = small_solver.op.matrix
    gap = abs(M - M.T)
    assert gap.max() < 1e-12


def test_constant_boundary_solve(small_solver):
    # Delta0 u = 0 with u = 1 on the boundary recovers the constant
    op = small_solver.op
    rhs = GridField(op.grid, np.zeros(op.grid.size))
    u = solve_poisson(rhs, bc=1.0, operator=op)
    assert np.max(np.abs(u.values - 1.0)) < 1e-6


def test_apply_solve_roundtrip(small_solver, rng):
    op = small_solver.op
    pts = op.grid.points()
    b = np.exp(-0.5 * np.sum(pts ** 2, axis=1))
    x = op.solve_spd(b, rtol=1e-11)
    r = op.apply(x) - b
    assert np.linalg.norm(r) / np.linalg.norm(b) < 1e-8


# -- functional ----------------------------------------------------------

def test_flat_value_exact_path():
    # int U L0 U - int U^4 = 8 pi^2 - 4 pi^2
    val = functional_value(zero_deformation(), bubble_field())
    assert val == pytest.approx(J4, rel=1e-6)


def test_constants():
    assert J_FLAT == pytest.approx(J4, abs=0.0)
    assert GRADIENT_PAIRING == -2.0
    assert GRAM_SCALING_WEIGHTS == (2, 2, 3, 1)


def test_grid_gradient_pairing(small_solver):
    # dJ(u)[w] against the X-representative, zero deformation,
    # bubble-tail boundary data.  The pairing identity holds for
    # interior variations, so the direction is cut off before the
    # Dirichlet shell.
    grid = small_solver.grid
    d0 = zero_deformation()
    pts = grid.points()
    w_vals = np.exp(-np.sum(pts ** 2, axis=1))
    margin = (np.max(np.abs(pts[:, :2]), axis=1) > 3.0) \
        | (np.abs(pts[:, 2]) > 3.0)
    w_vals[margin] = 0.0
    u = GridField(grid, small_solver.U.copy())
    g = functional_gradient(d0, u, boundary="bubble",
                            operator=small_solver.op)
    pair = GRADIENT_PAIRING * small_solver.x_inner(g.values, w_vals)
    eps = 1e-4
    jp = functional_value(d0, GridField(grid, u.values + eps * w_vals),
                          boundary="bubble")
    jm = functional_value(d0, GridField(grid, u.values - eps * w_vals),
                          boundary="bubble")
    fd = (jp - jm) / (2 * eps)
    assert fd == pytest.approx(pair, rel=1e-5)


# -- tangent geometry ----------------------------------------------------

def test_gram_quadrature_diagonal():
    G = gram_matrix(BubbleParams())
    assert np.allclose(G, G.T)
    assert np.all(np.linalg.eigvalsh(G) > 0)
    want = (8.635902, 8.635902, 3.701102, 34.542758)
    assert np.allclose(np.diag(G), want, rtol=1e-5)


def test_gram_scaling_law():
    lam = 1.7
    G1 = gram_matrix(BubbleParams())
    Gl = gram_matrix(BubbleParams(scale=lam))
    w = GRAM_SCALING_WEIGHTS
    pred = np.array([[lam ** (w[i] + w[j] - 2) * G1[i, j]
                      for j in range(4)] for i in range(4)])
    # the dilation direction carries the slowest-decaying tail and
    # dominates the quadrature error (measured 1.6e-5 relative)
    assert np.allclose(Gl, pred, rtol=1e-4, atol=1e-10)


def test_projector_idempotent(small_solver, rng):
    grid = small_solver.grid
    pts = grid.points()
    u = GridField(grid, np.exp(-0.4 * np.sum(pts ** 2, axis=1))
                  * (1.0 + 0.3 * pts[:, 0]))
    p1 = project_E(u, BubbleParams())
    p2 = project_E(p1, BubbleParams())
    scale = np.max(np.abs(p1.values))
    assert np.max(np.abs(p2.values - p1.values)) < 1e-10 * scale


def test_projector_annihilates_tangent(small_solver):
    grid = small_solver.grid
    fields = tangent_basis(BubbleParams())
    for name in BASIS_NAMES:
        vals = fields[name].values(grid.points()).real
        out = project_E(GridField(grid, vals), BubbleParams())
        assert np.max(np.abs(out.values)) < 1e-9 * np.max(np.abs(vals))


def test_solver_projection_consistency(small_solver, rng):
    a = rng.standard_normal(small_solver.n)
    pa = small_solver.project(a)
    assert small_solver.tangent_residual(pa) < 1e-10
    # projecting twice changes nothing
    assert np.allclose(small_solver.project(pa), pa, atol=1e-12)


def test_solver_gram_spd(small_solver):
    G = small_solver.gram
    assert np.allclose(G, G.T)
    assert np.all(np.linalg.eigvalsh(G) > 0)


# -- transverse solve ----------------------------------------------------

def test_flat_solve_short_circuit(small_solver):
    state = small_solver.ls_solve(BubbleParams(), zero_deformation())
    assert state.iterations == 0
    assert state.norm_v == 0.0
    assert state.converged
    assert np.all(state.v.values == 0.0)
    value, parts, _ = small_solver.reduced_value(BubbleParams(),
                                                 zero_deformation())
    assert value == J_FLAT
    assert parts["deformation_self"] == 0.0


def _small_ball(s=0.1):
    spec = GluingSpec(centers=(HPoint(0.0, 0.0, 0.0),), radii=(0.3,),
                      amplitudes=(s,), annulus_factor=2.0)
    return glued_deformation(spec)


def test_ball_solve_contracts(small_solver):
    d = _small_ball()
    state = small_solver.ls_solve(BubbleParams(), d, tol=1e-6)
    assert state.converged
    assert state.residual_norm <= 1e-6
    assert state.norm_v > 0.0
    assert state.iterations >= 1
    hist = np.asarray(state.residual_history)
    assert np.all(np.diff(hist) < 0.0)
    # the correction stays X-orthogonal to the tangent span
    assert state.tangent_residual < 1e-8


def test_ball_solve_warm_start(small_solver):
    d = _small_ball()
    state = small_solver.ls_solve(BubbleParams(), d, tol=1e-6)
    again = small_solver.ls_solve(BubbleParams(), d, tol=1e-6,
                                  v0=state.v.values)
    assert again.iterations == 0
    assert again.norm_v == pytest.approx(state.norm_v, rel=1e-10)


def test_value_parts_sum(small_solver):
    d = _small_ball()
    value, parts, state = small_solver.reduced_value(BubbleParams(), d,
                                                     tol=1e-6)
    total = (parts["flat"] + 4.0 * parts["norm_sq"]
             + parts["deformation_self"] + parts["cross"]
             + parts["deformation_v"] + parts["nonlinear"])
    assert value == pytest.approx(total, rel=1e-12)
    assert parts["deformation_self"] > 0.0
    assert math.isfinite(value)


def test_support_leaves_box_raises(small_solver):
    # radius 1.2 ball pulled back at scale 3 has gauge radius 3.6 and
    # parabolic reach far beyond the 4.0 box
    spec = GluingSpec(centers=(HPoint(0.0, 0.0, 0.0),), radii=(0.6,),
                      amplitudes=(0.05,), annulus_factor=2.0)
    d = glued_deformation(spec)
    with pytest.raises(ConfigError):
        small_solver.ls_solve(BubbleParams(scale=3.0), d, tol=1e-4)


# -- windows -------------------------------------------------------------

def test_window_defaults_and_axes():
    w = ScanWindow()
    lams = w.lambdas()
    assert lams[0] == pytest.approx(w.alpha / w.window_radius)
    assert lams[-1] == pytest.approx(w.beta / w.ball_radius)
    xs, ys, ts = w.offsets()
    assert len(xs) == w.shape[0] and len(ts) == w.shape[2]
    assert xs[-1] == pytest.approx(w.x_fraction * w.window_radius)
    assert ts[-1] == pytest.approx(w.t_fraction * w.window_radius ** 2)


@pytest.mark.parametrize("kwargs", [
    {"shape": (3, 3, 3)},
    {"shape": (2, 3, 3, 3)},
    {"alpha": 1.2, "beta": 0.2},
    {"x_fraction": 0.8, "t_fraction": 0.9},
    {"ball_radius": -0.1},
])
def test_window_validation(kwargs):
    with pytest.raises(ConfigError):
        ScanWindow(**kwargs)


def test_vacuous_scan(small_solver):
    w = ScanWindow(ball_radius=0.3, window_radius=0.6, alpha=0.36,
                   beta=0.45, shape=(3, 3, 3, 3))
    res = scan_window(w, zero_deformation(), solver=small_solver)
    assert res.verdict["verdict"] == "vacuous"
    assert len(res.rows) == 81
    assert res.verdict["flat_spread"] == 0.0
    assert all(r["value"] == J_FLAT for r in res.rows)


def test_scan_corner_geometry_guard(small_solver):
    # beta/r = 3 pulls the support ball's parabolic reach far past
    # the box height; the scan must refuse before solving anything
    spec = GluingSpec(centers=(HPoint(0.0, 0.0, 0.0),), radii=(0.3,),
                      amplitudes=(0.05,), annulus_factor=4.0)
    d = glued_deformation(spec)
    w = ScanWindow(ball_radius=0.3, window_radius=0.6, alpha=0.36,
                   beta=0.9, shape=(3, 3, 3, 3))
    with pytest.raises(ConfigError):
        scan_window(w, d, solver=small_solver, tol=1e-4)
