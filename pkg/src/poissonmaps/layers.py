"""Closed-form Poisson-map layers: the network's building blocks.

Each layer is the exact time-dt flow of a simple test Hamiltonian of the
coupled bracket, so it preserves every Casimir of its case by construction,
for arbitrary parameter values. The catalogue:

* axis rotations generated by h = f(<a, momentum>) with a along a basis
  axis: the scalar argument is conserved along its own flow, so the flow is
  a rigid rotation of the affected blocks by angle theta = (alpha *
  sigma(beta * m) + gamma) * dt about that axis;
* orientation kicks generated by h(p) = sum M_ij f(p_ij) + N_ij p_ij: the
  group element is frozen, so the momentum rates vee(G p^T), -vee(p^T G)
  with G = M * sigma(p) + N are constant and integrate exactly;
* translation/shear kicks on SE(3) (momenta linear in t, group frozen).

Forward passes and hand-derived vector-Jacobian products are vectorized
over a leading batch axis. Rotations act about coordinate axes only, so
they reduce to Givens updates on two components; no 3x3 products appear in
the rotation layers at all.

Flat state layouts (matrices row-major):
  so2: [mu1, mu2, Phi]
  so3: [mu1(3), mu2(3), p(9)]
  se3: [alpha1(3), beta1(3), alpha2(3), beta2(3), Q(9), v(3)]

Every layer's inverse is the same layer applied with dt -> -dt, because the
quantities entering each generator are invariant along that layer's own flow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .systems import (
    SE3CoupledState,
    SO2ReducedState,
    SO3CoupledState,
    _hat_batch,
    _vee_batch,
)


def _sech2(x):
    t = np.tanh(x)
    return 1.0 - t * t


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _dsigmoid(x):
    s = _sigmoid(x)
    return s * (1.0 - s)


ACTIVATIONS = {"tanh": (np.tanh, _sech2), "sigmoid": (_sigmoid, _dsigmoid)}


@dataclass(frozen=True)
class ActivationKind:
    """Named smooth bounded activation; only sigma itself is ever integrated against."""

    name: str = "tanh"

    def __post_init__(self):
        if self.name not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.name!r}; choose from {sorted(ACTIVATIONS)}")

    @property
    def fn(self):
        return ACTIVATIONS[self.name][0]

    @property
    def deriv(self):
        return ACTIVATIONS[self.name][1]


@dataclass(frozen=True)
class RotationLayerParams:
    alpha: float
    beta: float
    gamma: float

    def as_array(self):
        return np.array([self.alpha, self.beta, self.gamma], dtype=float)


@dataclass(frozen=True)
class KickLayerParams:
    """Gain matrices of an orientation kick; so2 uses only the upper-left 2x2 blocks."""

    M: np.ndarray
    N: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "M", np.asarray(self.M, dtype=float))
        object.__setattr__(self, "N", np.asarray(self.N, dtype=float))

    def as_array(self):
        return np.concatenate([self.M.reshape(-1), self.N.reshape(-1)])


@dataclass(frozen=True)
class TranslationKickParams:
    L: np.ndarray
    M: np.ndarray
    N: np.ndarray

    def as_array(self):
        return np.concatenate(
            [np.asarray(self.L, float), np.asarray(self.M, float), np.asarray(self.N, float)]
        )


def _cyc(axis):
    return (axis + 1) % 3, (axis + 2) % 3


def _rot_vec(y, start, axis, c, s):
    """In-place rotation of the 3-vector slice at ``start`` by the angle with cos c, sin s."""
    a, b = _cyc(axis)
    ya = y[:, start + a].copy()
    yb = y[:, start + b]
    y[:, start + a] = c * ya - s * yb
    y[:, start + b] = s * ya + c * yb


def _rot_mat_left(y, start, axis, c, s):
    """In-place left multiplication of the row-major 3x3 slice by the rotation."""
    a, b = _cyc(axis)
    c = c[:, None]
    s = s[:, None]
    ra = y[:, start + 3 * a : start + 3 * a + 3].copy()
    rb = y[:, start + 3 * b : start + 3 * b + 3]
    y[:, start + 3 * a : start + 3 * a + 3] = c * ra - s * rb
    y[:, start + 3 * b : start + 3 * b + 3] = s * ra + c * rb


def _rot_mat_right(y, start, axis, c, s):
    """In-place right multiplication of the row-major 3x3 slice by the rotation."""
    a, b = _cyc(axis)
    c = c[:, None]
    s = s[:, None]
    ia = [start + a, start + 3 + a, start + 6 + a]
    ib = [start + b, start + 3 + b, start + 6 + b]
    ca = y[:, ia].copy()
    cb = y[:, ib]
    y[:, ia] = c * ca + s * cb
    y[:, ib] = -s * ca + c * cb


class Layer:
    """Base interface: pure maps of a batch of flat states, with analytic VJPs."""

    n_params = 0
    case = None

    def forward(self, x, q, dt):
        y, _ = self.forward_cached(x, q, dt)
        return y

    def forward_cached(self, x, q, dt):
        raise NotImplementedError

    def vjp(self, cache, wy):
        """Return (cotangent of the input state, gradient w.r.t. the layer params)."""
        raise NotImplementedError

    def inverse(self, y, q, dt):
        """Exact inverse flow; generators are invariant along their own flow."""
        return self.forward(y, q, -dt)


class AxisRotationLayer(Layer):
    """Rigid rotation of selected state blocks about a basis axis.

    The angle is theta = (alpha * sigma(beta * m) + gamma) * dt where m is
    the momentum component along the axis, itself invariant under the flow.
    ``vec_slices`` and ``mat_slices`` list the affected blocks with the sign
    of the angle each one sees (matrix blocks also carry the side).
    """

    n_params = 3

    def __init__(self, case, m_index, axis, vec_slices, mat_slices, activation):
        self.case = case
        self.m_index = m_index
        self.axis = axis
        self.vec_slices = tuple(vec_slices)
        self.mat_slices = tuple(mat_slices)
        self.sigma, self.dsigma = ACTIVATIONS[activation]

    def forward_cached(self, x, q, dt):
        alpha, beta, gamma = q
        m = x[:, self.m_index]
        u = beta * m
        sig = self.sigma(u)
        theta = (alpha * sig + gamma) * dt
        c = np.cos(theta)
        s = np.sin(theta)
        y = x.copy()
        for start, sign in self.vec_slices:
            _rot_vec(y, start, self.axis, c, sign * s)
        for start, side, sign in self.mat_slices:
            if side == "L":
                _rot_mat_left(y, start, self.axis, c, sign * s)
            else:
                _rot_mat_right(y, start, self.axis, c, sign * s)
        return y, (q, dt, m, u, sig, c, s, y)

    def vjp(self, cache, wy):
        q, dt, m, u, sig, c, s, y = cache
        alpha, beta, gamma = q
        a, b = _cyc(self.axis)
        wx = wy.copy()
        ctheta = np.zeros(wy.shape[0])
        for start, sign in self.vec_slices:
            _rot_vec(wx, start, self.axis, c, -sign * s)
            ctheta += sign * (
                wy[:, start + b] * y[:, start + a] - wy[:, start + a] * y[:, start + b]
            )
        for start, side, sign in self.mat_slices:
            if side == "L":
                _rot_mat_left(wx, start, self.axis, c, -sign * s)
                wa = wy[:, start + 3 * a : start + 3 * a + 3]
                wb = wy[:, start + 3 * b : start + 3 * b + 3]
                ya = y[:, start + 3 * a : start + 3 * a + 3]
                yb = y[:, start + 3 * b : start + 3 * b + 3]
                ctheta += sign * np.sum(wb * ya - wa * yb, axis=1)
            else:
                _rot_mat_right(wx, start, self.axis, c, -sign * s)
                ia = [start + a, start + 3 + a, start + 6 + a]
                ib = [start + b, start + 3 + b, start + 6 + b]
                ctheta += sign * np.sum(wy[:, ia] * y[:, ib] - wy[:, ib] * y[:, ia], axis=1)
        dsig = self.dsigma(u)
        wx[:, self.m_index] += ctheta * (alpha * dsig * beta * dt)
        grad = np.array(
            [
                dt * np.sum(ctheta * sig),
                dt * alpha * np.sum(ctheta * dsig * m),
                dt * np.sum(ctheta),
            ]
        )
        return wx, grad


class MatrixKickLayer(Layer):
    """Momentum kick generated by h(p) = sum_ij M_ij f(p_ij) + N_ij p_ij.

    With G = M * sigma(p) + N the flow adds dt*vee(G p^T) to the first
    angular momentum and subtracts dt*vee(p^T G) from the second one; the
    group element is untouched. Since vee(G p^T) = p vee(p^T G) for p in
    SO(3), the transported total momentum is exactly invariant.
    """

    n_params = 18

    def __init__(self, case, mom1, mom2, mat, activation):
        self.case = case
        self.mom1 = mom1
        self.mom2 = mom2
        self.mat = mat
        self.sigma, self.dsigma = ACTIVATIONS[activation]

    def forward_cached(self, x, q, dt):
        M = q[0:9].reshape(3, 3)
        N = q[9:18].reshape(3, 3)
        P = x[:, self.mat : self.mat + 9].reshape(-1, 3, 3)
        S = self.sigma(P)
        G = M * S + N
        Pt = np.swapaxes(P, 1, 2)
        y = x.copy()
        y[:, self.mom1 : self.mom1 + 3] += dt * _vee_batch(np.matmul(G, Pt))
        y[:, self.mom2 : self.mom2 + 3] -= dt * _vee_batch(np.matmul(Pt, G))
        return y, (q, dt, P, S, G)

    def vjp(self, cache, wy):
        q, dt, P, S, G = cache
        M = q[0:9].reshape(3, 3)
        w1 = wy[:, self.mom1 : self.mom1 + 3]
        w2 = wy[:, self.mom2 : self.mom2 + 3]
        L1 = 0.5 * dt * _hat_batch(w1)
        L2 = -0.5 * dt * _hat_batch(w2)
        cotG = np.matmul(L1, P) + np.matmul(P, L2)
        cotP = (
            wy[:, self.mat : self.mat + 9].reshape(-1, 3, 3)
            - np.matmul(L1, G)
            - np.matmul(G, L2)
            + cotG * M * self.dsigma(P)
        )
        wx = wy.copy()
        wx[:, self.mat : self.mat + 9] = cotP.reshape(-1, 9)
        grad = np.concatenate(
            [np.sum(cotG * S, axis=0).reshape(9), np.sum(cotG, axis=0).reshape(9)]
        )
        return wx, grad


class MomentumShearLayer(Layer):
    """SE(3) translation-momentum step: h = g(<b, beta_body>) with b on a basis axis.

    Body 1 (kind 2): alpha1 -= theta e_i x beta1 and v -= theta e_i.
    Body 2 (kind 4): alpha2 -= theta e_i x beta2 and v += theta Q e_i.
    Both follow from the general bracket equations; beta, Q stay fixed, so
    the rates are constant along the flow.
    """

    n_params = 3

    def __init__(self, body, axis, activation):
        self.case = "se3"
        self.body = body
        self.axis = axis
        self.beta_start = 3 if body == 1 else 9
        self.alpha_start = 0 if body == 1 else 6
        self.sigma, self.dsigma = ACTIVATIONS[activation]

    def forward_cached(self, x, q, dt):
        alpha, beta, gamma = q
        i = self.axis
        a, b = _cyc(i)
        m = x[:, self.beta_start + i]
        u = beta * m
        sig = self.sigma(u)
        theta = (alpha * sig + gamma) * dt
        bva = x[:, self.beta_start + a]
        bvb = x[:, self.beta_start + b]
        y = x.copy()
        # alpha_body -= theta * (e_i x beta_body)
        y[:, self.alpha_start + a] += theta * bvb
        y[:, self.alpha_start + b] -= theta * bva
        if self.body == 1:
            y[:, 21 + i] -= theta
        else:
            qcol = x[:, [12 + i, 15 + i, 18 + i]]
            y[:, 21:24] += theta[:, None] * qcol
        return y, (q, dt, x, m, u, sig, theta)

    def vjp(self, cache, wy):
        q, dt, x, m, u, sig, theta = cache
        alpha, beta, gamma = q
        i = self.axis
        a, b = _cyc(i)
        wa = wy[:, self.alpha_start + a]
        wb = wy[:, self.alpha_start + b]
        bva = x[:, self.beta_start + a]
        bvb = x[:, self.beta_start + b]
        ctheta = wa * bvb - wb * bva
        wx = wy.copy()
        wx[:, self.beta_start + b] += theta * wa
        wx[:, self.beta_start + a] -= theta * wb
        if self.body == 1:
            ctheta -= wy[:, 21 + i]
        else:
            idx = [12 + i, 15 + i, 18 + i]
            qcol = x[:, idx]
            ctheta += np.sum(wy[:, 21:24] * qcol, axis=1)
            wx[:, idx] += theta[:, None] * wy[:, 21:24]
        dsig = self.dsigma(u)
        wx[:, self.beta_start + i] += ctheta * (alpha * dsig * beta * dt)
        grad = np.array(
            [
                dt * np.sum(ctheta * sig),
                dt * alpha * np.sum(ctheta * dsig * m),
                dt * np.sum(ctheta),
            ]
        )
        return wx, grad


class TranslationKickLayer(Layer):
    """SE(3) kind-6 step generated by h(v) with dh/dv = w, w_i = M_i sigma(L_i v_i) + N_i.

    v and Q are frozen, so alpha1 += dt (v x w), beta1 += dt w and
    beta2 -= dt Q^T w integrate exactly; the combined linear momentum
    beta1 + Q beta2 is untouched.
    """

    n_params = 9

    def __init__(self, activation):
        self.case = "se3"
        self.sigma, self.dsigma = ACTIVATIONS[activation]

    def forward_cached(self, x, q, dt):
        L, M, N = q[0:3], q[3:6], q[6:9]
        v = x[:, 21:24]
        Q = x[:, 12:21].reshape(-1, 3, 3)
        u = L * v
        sig = self.sigma(u)
        w = M * sig + N
        y = x.copy()
        y[:, 0:3] += dt * np.cross(v, w)
        y[:, 3:6] += dt * w
        y[:, 9:12] -= dt * np.einsum("nji,nj->ni", Q, w)
        return y, (q, dt, v, Q, u, sig, w)

    def vjp(self, cache, wy):
        q, dt, v, Q, u, sig, w = cache
        L, M, N = q[0:3], q[3:6], q[6:9]
        wa1 = wy[:, 0:3]
        wb1 = wy[:, 3:6]
        wb2 = wy[:, 9:12]
        cw = dt * (np.cross(wa1, v) + wb1 - np.einsum("nij,nj->ni", Q, wb2))
        dsig = self.dsigma(u)
        wx = wy.copy()
        wx[:, 21:24] += dt * np.cross(w, wa1) + cw * M * dsig * L
        wx[:, 12:21] -= dt * (w[:, :, None] * wb2[:, None, :]).reshape(-1, 9)
        grad = np.concatenate(
            [np.sum(cw * M * dsig * v, axis=0), np.sum(cw * sig, axis=0), np.sum(cw, axis=0)]
        )
        return wx, grad


class PlanarRotationLayer(Layer):
    """so2 rotation step: the relative angle shifts, the momenta stay put.

    theta = (alpha * sigma(beta * mu) + gamma) * beta * dt, with the extra
    beta factor coming from the chain rule through the generator's argument
    <a, mu> with a = beta * E3. Body 1 turns the angle by -theta, body 2 by
    +theta, the exact flows of the embedded test Hamiltonians.
    """

    n_params = 3

    def __init__(self, body, activation):
        self.case = "so2"
        self.body = body
        self.sign = -1.0 if body == 1 else 1.0
        self.m_index = body - 1
        self.sigma, self.dsigma = ACTIVATIONS[activation]

    def forward_cached(self, x, q, dt):
        alpha, beta, gamma = q
        m = x[:, self.m_index]
        u = beta * m
        sig = self.sigma(u)
        theta = (alpha * sig + gamma) * beta * dt
        y = x.copy()
        y[:, 2] += self.sign * theta
        return y, (q, dt, m, u, sig)

    def vjp(self, cache, wy):
        q, dt, m, u, sig = cache
        alpha, beta, gamma = q
        dsig = self.dsigma(u)
        wphi = self.sign * wy[:, 2]
        wx = wy.copy()
        wx[:, self.m_index] += wphi * (alpha * dsig * beta * beta * dt)
        grad = np.array(
            [
                beta * dt * np.sum(wphi * sig),
                dt * np.sum(wphi * (alpha * dsig * beta * m + alpha * sig + gamma)),
                beta * dt * np.sum(wphi),
            ]
        )
        return wx, grad


class PlanarKickLayer(Layer):
    """so2 orientation kick: the 2x2-restricted matrix kick on the vertical momenta.

    Embedding Phi as p = Rz(Phi), the vertical component of vee(G p^T) is
    T = ((G21 - G12) cos Phi - (G11 + G22) sin Phi) / 2, added to mu1 and
    subtracted from mu2, so mu1 + mu2 is preserved exactly. Parameter
    layout: [M11, M12, M21, M22, N11, N12, N21, N22].
    """

    n_params = 8

    def __init__(self, activation):
        self.case = "so2"
        self.sigma, self.dsigma = ACTIVATIONS[activation]

    @staticmethod
    def _p_entries(phi):
        c = np.cos(phi)
        s = np.sin(phi)
        return c, s, np.stack([c, -s, s, c], axis=-1)

    def forward_cached(self, x, q, dt):
        M = q[0:4]
        N = q[4:8]
        phi = x[:, 2]
        c, s, pent = self._p_entries(phi)
        S = self.sigma(pent)
        G = M * S + N
        T = 0.5 * ((G[:, 2] - G[:, 1]) * c - (G[:, 0] + G[:, 3]) * s)
        y = x.copy()
        y[:, 0] += dt * T
        y[:, 1] -= dt * T
        return y, (q, dt, phi, c, s, pent, S, G)

    def vjp(self, cache, wy):
        q, dt, phi, c, s, pent, S, G = cache
        M = q[0:4]
        cT = dt * (wy[:, 0] - wy[:, 1])
        # dT/dG per entry (11, 12, 21, 22) and dp/dPhi per entry
        dT_dG = 0.5 * np.stack([-s, -c, c, -s], axis=-1)
        cotG = cT[:, None] * dT_dG
        dT_direct = 0.5 * (-(G[:, 2] - G[:, 1]) * s - (G[:, 0] + G[:, 3]) * c)
        dp_dphi = np.stack([-s, -c, c, -s], axis=-1)
        wx = wy.copy()
        wx[:, 2] += cT * dT_direct + np.sum(cotG * M * self.dsigma(pent) * dp_dphi, axis=1)
        grad = np.concatenate([np.sum(cotG * S, axis=0), np.sum(cotG, axis=0)])
        return wx, grad


# ---------------------------------------------------------------------------
# layer factories per case
# ---------------------------------------------------------------------------


def so3_rotation_layer(body, axis, activation="tanh"):
    if body == 1:
        return AxisRotationLayer("so3", axis, axis, [(0, -1.0)], [(6, "L", -1.0)], activation)
    return AxisRotationLayer("so3", 3 + axis, axis, [(3, -1.0)], [(6, "R", 1.0)], activation)


def so3_kick_layer(activation="tanh"):
    return MatrixKickLayer("so3", 0, 3, 6, activation)


def se3_rotation_layer(body, axis, activation="tanh"):
    if body == 1:
        return AxisRotationLayer(
            "se3", axis, axis, [(0, -1.0), (3, -1.0), (21, -1.0)], [(12, "L", -1.0)], activation
        )
    return AxisRotationLayer(
        "se3", 6 + axis, axis, [(6, -1.0), (9, -1.0)], [(12, "R", 1.0)], activation
    )


def se3_shear_layer(body, axis, activation="tanh"):
    return MomentumShearLayer(body, axis, activation)


def se3_orientation_kick_layer(activation="tanh"):
    return MatrixKickLayer("se3", 0, 6, 12, activation)


def se3_translation_kick_layer(activation="tanh"):
    return TranslationKickLayer(activation)


def so2_rotation_layer(body, activation="tanh"):
    return PlanarRotationLayer(body, activation)


def so2_kick_layer(activation="tanh"):
    return PlanarKickLayer(activation)


# ---------------------------------------------------------------------------
# single-state convenience API on the typed states
# ---------------------------------------------------------------------------


def _apply_single(layer, flat_state, q, dt):
    y = layer.forward(flat_state[None, :].copy(), np.asarray(q, dtype=float), dt)
    return y[0]


def so3_momentum_rotation(state, body, axis, params: RotationLayerParams, dt, activation="tanh"):
    """Exact flow of the body-momentum test Hamiltonian about basis axis ``axis`` (1-based)."""
    layer = so3_rotation_layer(body, axis - 1, activation)
    return SO3CoupledState.from_flat(_apply_single(layer, state.flat(), params.as_array(), dt))


def so3_orientation_kick(state, params: KickLayerParams, dt, activation="tanh"):
    """Exact flow of the orientation test Hamiltonian: momenta kicked, p frozen."""
    layer = so3_kick_layer(activation)
    return SO3CoupledState.from_flat(_apply_single(layer, state.flat(), params.as_array(), dt))


def se3_step(state, kind, params, dt, axis=1, activation="tanh"):
    """Apply one of the six SE(3) step kinds (1-based axis for kinds 1-4)."""
    if kind == 1:
        layer = se3_rotation_layer(1, axis - 1, activation)
    elif kind == 2:
        layer = se3_shear_layer(1, axis - 1, activation)
    elif kind == 3:
        layer = se3_rotation_layer(2, axis - 1, activation)
    elif kind == 4:
        layer = se3_shear_layer(2, axis - 1, activation)
    elif kind == 5:
        layer = se3_orientation_kick_layer(activation)
    elif kind == 6:
        layer = se3_translation_kick_layer(activation)
    else:
        raise ValueError(f"unknown SE(3) step kind {kind!r}")
    return SE3CoupledState.from_flat(_apply_single(layer, state.flat(), params.as_array(), dt))


def so2_layer(state, sub, params, dt, activation="tanh"):
    """Apply a planar sub-layer: 'rot1', 'rot2' or 'kick'."""
    if sub == "rot1":
        layer = so2_rotation_layer(1, activation)
    elif sub == "rot2":
        layer = so2_rotation_layer(2, activation)
    elif sub == "kick":
        layer = so2_kick_layer(activation)
    else:
        raise ValueError(f"unknown so2 sub-layer {sub!r}")
    q = params.as_array()
    if sub == "kick":
        M = params.M
        N = params.N
        q = np.concatenate([M[:2, :2].reshape(4), N[:2, :2].reshape(4)])
    return SO2ReducedState.from_flat(_apply_single(layer, state.flat(), q, dt))


def layer_vjp(layer: Layer, state, q, dt, out_cotangent):
    """Vector-Jacobian product of a layer map for a single flat state.

    Returns (cotangent w.r.t. the input state, gradient w.r.t. the layer
    parameters), both as flat arrays.
    """
    x = np.asarray(state, dtype=float)[None, :]
    q = np.asarray(q, dtype=float)
    _, cache = layer.forward_cached(x.copy(), q, dt)
    wx, grad = layer.vjp(cache, np.asarray(out_cotangent, dtype=float)[None, :])
    return wx[0], grad
