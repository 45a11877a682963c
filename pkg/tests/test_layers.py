"""Layer tests: exact-flow oracles, Casimir preservation, VJPs, inverses.

The exact-flow oracle builds the equations of motion for each layer's test
Hamiltonian from the general bracket equations (independently of the layer
code) and integrates them with the adaptive reference integrator; the layer
output must match to tight absolute tolerance.
"""

import numpy as np
import pytest

from poissonmaps import layers as L
from poissonmaps import systems as S
from poissonmaps.groundtruth import integrate
from poissonmaps.layers import (
    ActivationKind,
    KickLayerParams,
    RotationLayerParams,
    TranslationKickParams,
    layer_vjp,
    se3_step,
    so2_layer,
    so3_momentum_rotation,
    so3_orientation_kick,
)
from poissonmaps.lie import rotation_defect

from conftest import random_se3_state, random_so2_state, random_so3_state, random_state

SIGMA = np.tanh

ZERO3 = lambda *a: np.zeros(3)
ZEROM = lambda *a: np.zeros((3, 3))


def so3_layer_field(layer, q):
    """Bracket equations of motion for the layer's test Hamiltonian (so3 case)."""
    if isinstance(layer, L.AxisRotationLayer):
        alpha, beta, gamma = q
        body = 1 if layer.m_index < 3 else 2

        def dh(mu1, mu2, p):
            e = np.zeros(3)
            m = (mu1 if body == 1 else mu2)[layer.axis]
            e[layer.axis] = alpha * SIGMA(beta * m) + gamma
            return e

        return S.so3_field_from_partials(
            dh if body == 1 else ZERO3, ZERO3 if body == 1 else dh, ZEROM
        )
    M, N = q[:9].reshape(3, 3), q[9:].reshape(3, 3)
    # the layer's gain matrix G is twice the half-trace-pairing derivative
    return S.so3_field_from_partials(ZERO3, ZERO3, lambda mu1, mu2, p: 0.5 * (M * SIGMA(p) + N))


def se3_layer_field(layer, q):
    fns = [ZERO3, ZERO3, ZERO3, ZERO3, ZEROM, ZERO3]
    if isinstance(layer, L.AxisRotationLayer):
        alpha, beta, gamma = q
        slot = 0 if layer.m_index < 3 else 2

        def dh(a1, b1, a2, b2, Q, v):
            e = np.zeros(3)
            m = (a1 if slot == 0 else a2)[layer.axis]
            e[layer.axis] = alpha * SIGMA(beta * m) + gamma
            return e

        fns[slot] = dh
    elif isinstance(layer, L.MomentumShearLayer):
        alpha, beta, gamma = q
        slot = 1 if layer.body == 1 else 3

        def dh(a1, b1, a2, b2, Q, v):
            e = np.zeros(3)
            m = (b1 if slot == 1 else b2)[layer.axis]
            e[layer.axis] = alpha * SIGMA(beta * m) + gamma
            return e

        fns[slot] = dh
    elif isinstance(layer, L.MatrixKickLayer):
        M, N = q[:9].reshape(3, 3), q[9:].reshape(3, 3)
        fns[4] = lambda a1, b1, a2, b2, Q, v: 0.5 * (M * SIGMA(Q) + N)
    else:
        lL, mM, nN = q[:3], q[3:6], q[6:9]
        fns[5] = lambda a1, b1, a2, b2, Q, v: mM * SIGMA(lL * v) + nN
    return S.se3_field_from_partials(*fns)


def so2_layer_field(layer, q):
    if isinstance(layer, L.PlanarRotationLayer):
        alpha, beta, gamma = q
        sign = layer.sign
        idx = layer.m_index

        def field(y):
            theta_rate = (alpha * SIGMA(beta * y[idx]) + gamma) * beta
            return np.array([0.0, 0.0, sign * theta_rate])

        return field
    M, N = q[:4], q[4:]

    def field(y):
        c, s = np.cos(y[2]), np.sin(y[2])
        pent = np.array([c, -s, s, c])
        G = M * SIGMA(pent) + N
        T = 0.5 * ((G[2] - G[1]) * c - (G[0] + G[3]) * s)
        return np.array([T, -T, 0.0])

    return field


def all_layers():
    out = []
    for body in (1, 2):
        for ax in range(3):
            out.append(("so3", L.so3_rotation_layer(body, ax)))
    out.append(("so3", L.so3_kick_layer()))
    for ax in range(3):
        out.append(("se3", L.se3_rotation_layer(1, ax)))
        out.append(("se3", L.se3_shear_layer(1, ax)))
        out.append(("se3", L.se3_rotation_layer(2, ax)))
        out.append(("se3", L.se3_shear_layer(2, ax)))
    out.append(("se3", L.se3_orientation_kick_layer()))
    out.append(("se3", L.se3_translation_kick_layer()))
    out.append(("so2", L.so2_rotation_layer(1)))
    out.append(("so2", L.so2_rotation_layer(2)))
    out.append(("so2", L.so2_kick_layer()))
    return out


def layer_field(case, layer, q):
    if case == "so3":
        return so3_layer_field(layer, q)
    if case == "se3":
        return se3_layer_field(layer, q)
    return so2_layer_field(layer, q)


def casimirs_of(case, y):
    if case == "so3":
        return np.atleast_1d(S.so3_casimir(y))
    if case == "se3":
        return S.se3_casimirs(y)
    return np.atleast_1d(S.so2_casimir(y))


@pytest.mark.parametrize("case,layer", all_layers(), ids=lambda v: getattr(v, "case", v) or "x")
def test_layer_matches_ode_flow(case, layer, rng):
    dt = 0.1
    for _ in range(10):
        q = rng.uniform(-1, 1, layer.n_params)
        y0 = random_state(case, rng)
        ref = integrate(layer_field(case, layer, q), y0, dt, rtol=1e-12, atol=1e-14).states[-1]
        out = layer.forward(y0[None, :], q, dt)[0]
        assert np.max(np.abs(out - ref)) <= 1e-10


@pytest.mark.parametrize("case,layer", all_layers(), ids=lambda v: getattr(v, "case", v) or "x")
def test_layer_zero_params_is_identity(case, layer, rng):
    y0 = random_state(case, rng)
    out = layer.forward(y0[None, :], np.zeros(layer.n_params), 0.1)[0]
    assert np.array_equal(out, y0)


@pytest.mark.parametrize("case,layer", all_layers(), ids=lambda v: getattr(v, "case", v) or "x")
def test_layer_preserves_casimirs(case, layer, rng):
    for _ in range(20):
        q = rng.uniform(-1, 1, layer.n_params)
        y0 = random_state(case, rng)
        y1 = layer.forward(y0[None, :], q, 0.1)[0]
        c0 = casimirs_of(case, y0)
        c1 = casimirs_of(case, y1)
        assert np.max(np.abs(c1 - c0)) <= 1e-13 * max(1.0, np.max(np.abs(c0)))


@pytest.mark.parametrize("case,layer", all_layers(), ids=lambda v: getattr(v, "case", v) or "x")
def test_layer_keeps_group_element_on_manifold(case, layer, rng):
    if case == "so2":
        return
    start = 6 if case == "so3" else 12
    for _ in range(10):
        q = rng.uniform(-1, 1, layer.n_params)
        y0 = random_state(case, rng)
        d0 = rotation_defect(y0[start : start + 9].reshape(3, 3))
        y1 = layer.forward(y0[None, :], q, 0.1)[0]
        d1 = rotation_defect(y1[start : start + 9].reshape(3, 3))
        assert d1 - d0 <= 5e-15


@pytest.mark.parametrize("case,layer", all_layers(), ids=lambda v: getattr(v, "case", v) or "x")
def test_layer_flows_compose_in_time(case, layer, rng):
    for _ in range(5):
        q = rng.uniform(-1, 1, layer.n_params)
        y0 = random_state(case, rng)
        dt1, dt2 = 0.07, 0.05
        y_split = layer.forward(layer.forward(y0[None, :], q, dt1), q, dt2)[0]
        y_joint = layer.forward(y0[None, :], q, dt1 + dt2)[0]
        assert np.max(np.abs(y_split - y_joint)) <= 1e-12


@pytest.mark.parametrize("case,layer", all_layers(), ids=lambda v: getattr(v, "case", v) or "x")
def test_layer_inverse_recovers_input(case, layer, rng):
    for _ in range(5):
        q = rng.uniform(-1, 1, layer.n_params)
        y0 = random_state(case, rng)
        y1 = layer.forward(y0[None, :], q, 0.1)
        back = layer.inverse(y1, q, 0.1)[0]
        assert np.max(np.abs(back - y0)) <= 1e-12


@pytest.mark.parametrize("case,layer", all_layers(), ids=lambda v: getattr(v, "case", v) or "x")
def test_layer_vjp_matches_finite_differences(case, layer, rng):
    dt = 0.1
    dim = {"so2": 3, "so3": 15, "se3": 24}[case]
    for _ in range(3):
        q = rng.uniform(-1, 1, layer.n_params)
        y0 = random_state(case, rng)
        w = rng.standard_normal(dim)
        wx, gq = layer_vjp(layer, y0, q, dt, w)

        def scalar(yy, qq):
            return w @ layer.forward(yy[None, :], qq, dt)[0]

        for k in range(dim):
            h = 1e-6 * (1.0 + abs(y0[k]))
            yp, ym = y0.copy(), y0.copy()
            yp[k] += h
            ym[k] -= h
            fd = (scalar(yp, q) - scalar(ym, q)) / (2 * h)
            assert abs(wx[k] - fd) <= 1e-6 * max(1.0, abs(fd))
        for k in range(layer.n_params):
            h = 1e-6 * (1.0 + abs(q[k]))
            qp, qm = q.copy(), q.copy()
            qp[k] += h
            qm[k] -= h
            fd = (scalar(y0, qp) - scalar(y0, qm)) / (2 * h)
            assert abs(gq[k] - fd) <= 1e-6 * max(1.0, abs(fd))


def test_identity_parameter_layer_vjp_passthrough(rng):
    layer = L.so3_rotation_layer(1, 0)
    y0 = random_so3_state(rng)
    w = rng.standard_normal(15)
    wx, gq = layer_vjp(layer, y0, np.zeros(3), 0.1, w)
    assert np.allclose(wx, w, atol=1e-16)


def test_rotation_gamma_gradient_is_time_scaled(rng):
    # d theta / d gamma = dt exactly; check through the vjp of body-1 rotation
    layer = L.so3_rotation_layer(1, 2)
    y0 = random_so3_state(rng)
    q = np.array([0.0, 0.0, 0.4])
    w = rng.standard_normal(15)
    dt = 0.05
    _, gq = layer_vjp(layer, y0, q, dt, w)
    h = 1e-7
    yp = layer.forward(y0[None, :], q + np.array([0, 0, h]), dt)[0]
    ym = layer.forward(y0[None, :], q - np.array([0, 0, h]), dt)[0]
    fd = w @ (yp - ym) / (2 * h)
    assert gq[2] == pytest.approx(fd, rel=1e-6, abs=1e-9)


# ---------------------------------------------------------------------------
# typed single-state wrappers
# ---------------------------------------------------------------------------


def test_so3_momentum_rotation_wrapper(rng):
    st = S.SO3CoupledState.from_flat(random_so3_state(rng))
    out = so3_momentum_rotation(st, 1, 3, RotationLayerParams(0.3, -0.5, 0.2), 0.1)
    assert isinstance(out, S.SO3CoupledState)
    # body-2 momentum untouched
    assert np.array_equal(out.mu2, st.mu2)
    assert abs(S.so3_casimir(out.flat()) - S.so3_casimir(st.flat())) <= 1e-13


def test_so3_orientation_kick_wrapper_reference_value():
    st = S.SO3CoupledState(np.zeros(3), np.zeros(3), np.eye(3))
    N = np.zeros((3, 3))
    N[0, 1] = 1.0
    out = so3_orientation_kick(st, KickLayerParams(np.zeros((3, 3)), N), 1.0)
    assert np.allclose(out.mu1, [0.0, 0.0, -0.5], atol=1e-16)
    assert np.allclose(out.mu2, [0.0, 0.0, 0.5], atol=1e-16)
    assert np.array_equal(out.p, st.p)


def test_se3_step_wrapper_kinds(rng):
    st = S.SE3CoupledState.from_flat(random_se3_state(rng))
    rp = RotationLayerParams(0.2, 0.3, -0.1)
    for kind in (1, 2, 3, 4):
        out = se3_step(st, kind, rp, 0.1, axis=2)
        assert isinstance(out, S.SE3CoupledState)
    out5 = se3_step(st, 5, KickLayerParams(np.ones((3, 3)) * 0.1, np.zeros((3, 3))), 0.1)
    out6 = se3_step(st, 6, TranslationKickParams([0.1] * 3, [0.2] * 3, [0.0] * 3), 0.1)
    for out in (out5, out6):
        assert np.max(np.abs(S.se3_casimirs(out.flat()) - S.se3_casimirs(st.flat()))) <= 1e-13
    with pytest.raises(ValueError):
        se3_step(st, 7, rp, 0.1)


def test_so2_layer_wrapper(rng):
    st = S.SO2ReducedState(0.4, -0.2, 1.1)
    rot = so2_layer(st, "rot1", RotationLayerParams(0.5, 0.7, 0.1), 0.1)
    assert rot.mu1 == st.mu1 and rot.mu2 == st.mu2 and rot.phi != st.phi
    M = np.zeros((3, 3))
    M[:2, :2] = 0.3
    kick = so2_layer(st, "kick", KickLayerParams(M, M), 0.1)
    assert kick.phi == st.phi
    assert kick.mu1 + kick.mu2 == pytest.approx(st.mu1 + st.mu2, abs=1e-15)
    with pytest.raises(ValueError):
        so2_layer(st, "twist", RotationLayerParams(0, 0, 0), 0.1)


def test_so2_kick_matches_embedded_so3_kick(rng):
    # the planar kick is the e3-projection of the full orientation kick
    for _ in range(20):
        y = random_so2_state(rng)
        M2 = rng.uniform(-1, 1, (2, 2))
        N2 = rng.uniform(-1, 1, (2, 2))
        M = np.zeros((3, 3))
        N = np.zeros((3, 3))
        M[:2, :2] = M2
        N[:2, :2] = N2
        dt = 0.1
        q = np.concatenate([M2.reshape(4), N2.reshape(4)])
        reduced = L.so2_kick_layer().forward(y[None, :], q, dt)[0]
        embedded = S.so2_embed(y)
        full = L.so3_kick_layer().forward(
            embedded[None, :], np.concatenate([M.reshape(9), N.reshape(9)]), dt
        )[0]
        assert abs(reduced[0] - full[2]) <= 1e-13
        assert abs(reduced[1] - full[5]) <= 1e-13


def test_activation_kind_validation():
    assert ActivationKind("tanh").fn is np.tanh
    a = ActivationKind("sigmoid")
    assert a.fn(0.0) == pytest.approx(0.5)
    assert a.deriv(0.0) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        ActivationKind("relu")


def test_sigmoid_layers_also_exact(rng):
    layer = L.so3_rotation_layer(1, 1, activation="sigmoid")
    sig = L.ACTIVATIONS["sigmoid"][0]
    q = rng.uniform(-1, 1, 3)
    y0 = random_so3_state(rng)

    def dh(mu1, mu2, p):
        e = np.zeros(3)
        e[1] = q[0] * sig(q[1] * mu1[1]) + q[2]
        return e

    f = S.so3_field_from_partials(dh, ZERO3, ZEROM)
    ref = integrate(f, y0, 0.1, rtol=1e-12, atol=1e-14).states[-1]
    out = layer.forward(y0[None, :], q, 0.1)[0]
    assert np.max(np.abs(out - ref)) <= 1e-10
