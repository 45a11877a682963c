"""Reference physical systems: Hamiltonians, exact vector fields, Casimirs.

Three coupled systems live here, all instances of the same bracket on
g* x g* x G with relative configuration p = g1^{-1} g2:

* ``so3``  -- two rigid bodies pinned at a common point, coupled through
  Coulomb charges fixed in each body frame. State ``[mu1, mu2, p]``.
* ``se3``  -- two rigid bodies free to rotate and translate relative to
  each other, with quadratic orientation/offset potentials (a two-element
  elastic-rod discretization). State ``[alpha1, beta1, alpha2, beta2, Q, v]``.
* ``so2``  -- the planar reduction of the so3 case: both bodies spin about
  a common vertical axis. State ``[mu1, mu2, Phi]``.

All state-valued functions accept flat arrays (optionally with leading
batch axes) using the row-major layouts above; small dataclasses wrap the
same data for callers who prefer named fields.

Derivative convention: partial derivatives with respect to group elements
(``dh/dp``, ``dh/dQ``) are plain component-wise matrices. The bracket's
half-trace pairing on SO(3) then puts a factor 2 on the orientation force
terms, e.g. mu1_dot += 2 * vee(dh/dp @ p.T); energy conservation along the
fields pins this factor, and the tests enforce it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .lie import SE3Element, check_rotation, coad_se3_group, coad_so3_group, hat, vee

SO3_DIM = 15
SE3_DIM = 24
SO2_DIM = 3

_D_TINY = 1e-12


class SingularConfigurationError(ValueError):
    """Two interacting charges coincide, so the Coulomb energy diverges."""


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------


def _charge_tuple(charges):
    out = []
    for q, xi in charges:
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (3,):
            raise ValueError("charge position must be a 3-vector")
        out.append((float(q), xi))
    return tuple(out)


@dataclass(frozen=True)
class SO3CoupledParams:
    """Inertia tensors (diagonals) and body-frame charges of the two bodies."""

    inertia1: np.ndarray
    inertia2: np.ndarray
    charges1: tuple
    charges2: tuple

    def __post_init__(self):
        for name in ("inertia1", "inertia2"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or np.any(v <= 0):
                raise ValueError(f"{name} must be three positive diagonal entries")
            object.__setattr__(self, name, v)
        if not self.charges1 or not self.charges2:
            raise ValueError("each body needs at least one charge (q may be zero)")
        object.__setattr__(self, "charges1", _charge_tuple(self.charges1))
        object.__setattr__(self, "charges2", _charge_tuple(self.charges2))

    @classmethod
    def default(cls):
        """Two charges -/+0.25 at +/- s_i E1 per body, s1 = 1, s2 = 3."""
        e1 = np.array([1.0, 0.0, 0.0])
        return cls(
            inertia1=np.array([1.0, 2.0, 3.0]),
            inertia2=np.array([2.0, 3.0, 4.0]),
            charges1=((-0.25, e1), (0.25, -e1)),
            charges2=((-0.25, 3 * e1), (0.25, -3 * e1)),
        )

    @classmethod
    def free(cls, inertia1=(1.0, 2.0, 3.0), inertia2=(2.0, 3.0, 4.0)):
        """Chargeless variant: two decoupled free rigid bodies."""
        zero = (0.0, np.zeros(3))
        return cls(np.asarray(inertia1, float), np.asarray(inertia2, float), (zero,), (zero,))

    @cached_property
    def _q1(self):
        return np.array([q for q, _ in self.charges1])

    @cached_property
    def _xi1(self):
        return np.array([xi for _, xi in self.charges1])

    @cached_property
    def _q2(self):
        return np.array([q for q, _ in self.charges2])

    @cached_property
    def _xi2(self):
        return np.array([xi for _, xi in self.charges2])

    @cached_property
    def _qq(self):
        """Pairwise charge products q1_i * q2_j, shape (m1, m2)."""
        return np.outer(self._q1, self._q2)


@dataclass(frozen=True)
class SE3CoupledParams:
    """Inertias, masses and the quadratic potential tensors P (orientation) and L (offset)."""

    inertia1: np.ndarray
    inertia2: np.ndarray
    m1: float
    m2: float
    P_diag: np.ndarray
    L_diag: np.ndarray

    def __post_init__(self):
        for name in ("inertia1", "inertia2", "P_diag", "L_diag"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,):
                raise ValueError(f"{name} must have three entries")
            object.__setattr__(self, name, v)
        if np.any(self.inertia1 <= 0) or np.any(self.inertia2 <= 0):
            raise ValueError("inertia entries must be positive")
        if self.m1 <= 0 or self.m2 <= 0:
            raise ValueError("masses must be positive")

    @classmethod
    def default(cls):
        return cls(
            inertia1=np.array([1.0, 2.0, 3.0]),
            inertia2=np.array([2.0, 3.0, 4.0]),
            m1=1.0,
            m2=1.0,
            P_diag=np.array([1.0, 2.0, 3.0]),
            L_diag=np.array([1.0, 2.0, 3.0]),
        )


# ---------------------------------------------------------------------------
# state records and flattening
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SO3CoupledState:
    mu1: np.ndarray
    mu2: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu1", np.asarray(self.mu1, dtype=float))
        object.__setattr__(self, "mu2", np.asarray(self.mu2, dtype=float))
        object.__setattr__(self, "p", check_rotation(self.p))

    def flat(self):
        return np.concatenate([self.mu1, self.mu2, self.p.reshape(9)])

    @classmethod
    def from_flat(cls, y):
        y = np.asarray(y, dtype=float)
        return cls(y[0:3], y[3:6], y[6:15].reshape(3, 3))


@dataclass(frozen=True)
class SE3CoupledState:
    alpha1: np.ndarray
    beta1: np.ndarray
    alpha2: np.ndarray
    beta2: np.ndarray
    Q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        for name in ("alpha1", "beta1", "alpha2", "beta2", "v"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "Q", check_rotation(self.Q))

    def flat(self):
        return np.concatenate(
            [self.alpha1, self.beta1, self.alpha2, self.beta2, self.Q.reshape(9), self.v]
        )

    @classmethod
    def from_flat(cls, y):
        y = np.asarray(y, dtype=float)
        return cls(y[0:3], y[3:6], y[6:9], y[9:12], y[12:21].reshape(3, 3), y[21:24])


@dataclass(frozen=True)
class SO2ReducedState:
    mu1: float
    mu2: float
    phi: float

    def flat(self):
        return np.array([self.mu1, self.mu2, self.phi], dtype=float)

    @classmethod
    def from_flat(cls, y):
        return cls(float(y[0]), float(y[1]), float(y[2]))


def _as_flat(state, dim):
    if hasattr(state, "flat") and not isinstance(state, np.ndarray):
        y = state.flat()
    else:
        y = np.asarray(state, dtype=float)
    if y.shape[-1] != dim:
        raise ValueError(f"expected state with {dim} components, got shape {y.shape}")
    return y


def _split_so3(y):
    mu1 = y[..., 0:3]
    mu2 = y[..., 3:6]
    p = y[..., 6:15].reshape(y.shape[:-1] + (3, 3))
    return mu1, mu2, p


def _split_se3(y):
    a1 = y[..., 0:3]
    b1 = y[..., 3:6]
    a2 = y[..., 6:9]
    b2 = y[..., 9:12]
    Q = y[..., 12:21].reshape(y.shape[:-1] + (3, 3))
    v = y[..., 21:24]
    return a1, b1, a2, b2, Q, v


def _hat_batch(w):
    out = np.zeros(w.shape[:-1] + (3, 3))
    out[..., 0, 1] = -w[..., 2]
    out[..., 0, 2] = w[..., 1]
    out[..., 1, 0] = w[..., 2]
    out[..., 1, 2] = -w[..., 0]
    out[..., 2, 0] = -w[..., 1]
    out[..., 2, 1] = w[..., 0]
    return out


def _vee_batch(m):
    return 0.5 * np.stack(
        [
            m[..., 2, 1] - m[..., 1, 2],
            m[..., 0, 2] - m[..., 2, 0],
            m[..., 1, 0] - m[..., 0, 1],
        ],
        axis=-1,
    )


# ---------------------------------------------------------------------------
# coupled SO(3) bodies
# ---------------------------------------------------------------------------


def _coulomb_geometry(p, params):
    """Distances and pair coefficients for the charge lattice; raises on contact."""
    xi1, xi2, qq = params._xi1, params._xi2, params._qq
    pxi2 = np.einsum("...ij,mj->...mi", p, xi2)
    diff = xi1[:, None, :] - pxi2[..., None, :, :]
    d = np.linalg.norm(diff, axis=-1)
    active = qq != 0.0
    if np.any(active) and np.any(d[..., active] < _D_TINY):
        raise SingularConfigurationError("interacting charges coincide (d_ij -> 0)")
    return pxi2, d, active


def so3_hamiltonian(state, params: SO3CoupledParams):
    """Kinetic energy of both bodies plus the Coulomb sum over inter-body charge pairs."""
    y = _as_flat(state, SO3_DIM)
    mu1, mu2, p = _split_so3(y)
    kin = 0.5 * np.sum(mu1 * mu1 / params.inertia1, axis=-1)
    kin = kin + 0.5 * np.sum(mu2 * mu2 / params.inertia2, axis=-1)
    qq = params._qq
    if np.any(qq != 0.0):
        _, d, active = _coulomb_geometry(p, params)
        with np.errstate(divide="ignore", invalid="ignore"):
            contrib = np.where(active, qq / np.where(d == 0.0, 1.0, d), 0.0)
        kin = kin + np.sum(contrib, axis=(-1, -2))
    return kin if kin.ndim else float(kin)


def so3_vector_field(state, params: SO3CoupledParams):
    """Exact equations of motion of the coupled bodies (flat, batched)."""
    y = _as_flat(state, SO3_DIM)
    mu1, mu2, p = _split_so3(y)
    om1 = mu1 / params.inertia1
    om2 = mu2 / params.inertia2
    mu1dot = np.cross(mu1, om1)
    mu2dot = np.cross(mu2, om2)
    qq = params._qq
    if np.any(qq != 0.0):
        xi1 = params._xi1
        xi2 = params._xi2
        pxi2, d, active = _coulomb_geometry(p, params)
        with np.errstate(divide="ignore", invalid="ignore"):
            coeff = np.where(active, qq / np.where(d == 0.0, 1.0, d) ** 3, 0.0)
        # torque on body 1: -sum c_ij xi1_i x (p xi2_j); body 2 gets +sum c_ij (p^T xi1_i) x xi2_j
        cr1 = np.cross(xi1[:, None, :], pxi2[..., None, :, :])
        mu1dot = mu1dot - np.sum(coeff[..., None] * cr1, axis=(-2, -3))
        ptxi1 = np.einsum("...ji,mj->...mi", p, xi1)
        cr2 = np.cross(ptxi1[..., :, None, :], xi2[None, :, :])
        mu2dot = mu2dot + np.sum(coeff[..., None] * cr2, axis=(-2, -3))
    pdot = -np.matmul(_hat_batch(om1), p) + np.matmul(p, _hat_batch(om2))
    return np.concatenate([mu1dot, mu2dot, pdot.reshape(y.shape[:-1] + (9,))], axis=-1)


def so3_casimir(state):
    """|mu1 + p mu2|^2: the squared total angular momentum seen from body 1."""
    y = _as_flat(state, SO3_DIM)
    mu1, mu2, p = _split_so3(y)
    u = mu1 + np.einsum("...ij,...j->...i", p, mu2)
    c = np.sum(u * u, axis=-1)
    return c if c.ndim else float(c)


def so3_field_from_partials(dh_dmu1, dh_dmu2, dh_dp):
    """Equations of motion for an arbitrary Hamiltonian given its partials.

    The callables receive (mu1, mu2, p) for a single state; ``dh_dp`` returns
    the component-wise 3x3 derivative matrix.
    """

    def field(y):
        y = np.asarray(y, dtype=float)
        mu1, mu2, p = _split_so3(y)
        xi1 = np.asarray(dh_dmu1(mu1, mu2, p), dtype=float)
        xi2 = np.asarray(dh_dmu2(mu1, mu2, p), dtype=float)
        D = np.asarray(dh_dp(mu1, mu2, p), dtype=float)
        mu1dot = -np.cross(xi1, mu1) + 2.0 * vee(D @ p.T)
        mu2dot = -np.cross(xi2, mu2) - 2.0 * vee(p.T @ D)
        pdot = -hat(xi1) @ p + p @ hat(xi2)
        return np.concatenate([mu1dot, mu2dot, pdot.reshape(9)])

    return field


def _block_fd(h, y, start, count, step):
    """Central differences of h(flat state) over a contiguous block of entries."""
    g = np.zeros(count)
    for k in range(count):
        delta = step * (1.0 + abs(y[start + k]))
        yp = y.copy()
        ym = y.copy()
        yp[start + k] += delta
        ym[start + k] -= delta
        g[k] = (h(yp) - h(ym)) / (2.0 * delta)
    return g


def so3_field_from_hamiltonian(h, step=1e-6):
    """Finite-difference fallback for user-supplied Hamiltonians h(flat state)."""

    def field(y):
        y = np.asarray(y, dtype=float)
        mu1, mu2, p = _split_so3(y)
        xi1 = _block_fd(h, y, 0, 3, step)
        xi2 = _block_fd(h, y, 3, 3, step)
        D = _block_fd(h, y, 6, 9, step).reshape(3, 3)
        mu1dot = -np.cross(xi1, mu1) + 2.0 * vee(D @ p.T)
        mu2dot = -np.cross(xi2, mu2) - 2.0 * vee(p.T @ D)
        pdot = -hat(xi1) @ p + p @ hat(xi2)
        return np.concatenate([mu1dot, mu2dot, pdot.reshape(9)])

    return field


# ---------------------------------------------------------------------------
# coupled SE(3) bodies
# ---------------------------------------------------------------------------


def se3_hamiltonian(state, params: SE3CoupledParams):
    """Two kinetic pairs plus the orientation and offset potentials."""
    y = _as_flat(state, SE3_DIM)
    a1, b1, a2, b2, Q, v = _split_se3(y)
    kin = 0.5 * np.sum(a1 * a1 / params.inertia1, axis=-1)
    kin = kin + 0.5 * np.sum(b1 * b1, axis=-1) / params.m1
    kin = kin + 0.5 * np.sum(a2 * a2 / params.inertia2, axis=-1)
    kin = kin + 0.5 * np.sum(b2 * b2, axis=-1) / params.m2
    dq = Q - np.eye(3)
    pot = 0.5 * np.einsum("...ij,i->...", dq * dq, params.P_diag)
    pot = pot + 0.5 * np.sum(v * v * params.L_diag, axis=-1)
    total = kin + pot
    return total if total.ndim else float(total)


def se3_vector_field(state, params: SE3CoupledParams):
    """Exact equations of motion of the coupled SE(3) pair (flat, batched)."""
    y = _as_flat(state, SE3_DIM)
    a1, b1, a2, b2, Q, v = _split_se3(y)
    om1 = a1 / params.inertia1
    om2 = a2 / params.inertia2
    V1 = b1 / params.m1
    V2 = b2 / params.m2
    D = params.P_diag[:, None] * (Q - np.eye(3))
    W = params.L_diag * v
    DQt = np.matmul(D, np.swapaxes(Q, -1, -2))
    QtD = np.matmul(np.swapaxes(Q, -1, -2), D)
    QV2 = np.einsum("...ij,...j->...i", Q, V2)
    QtW = np.einsum("...ji,...j->...i", Q, W)
    a1dot = -np.cross(om1, a1) - np.cross(V1, b1) + 2.0 * _vee_batch(DQt) + np.cross(v, W)
    b1dot = -np.cross(om1, b1) + W
    a2dot = -np.cross(om2, a2) - np.cross(V2, b2) - 2.0 * _vee_batch(QtD)
    b2dot = -np.cross(om2, b2) - QtW
    Qdot = -np.matmul(_hat_batch(om1), Q) + np.matmul(Q, _hat_batch(om2))
    vdot = -np.cross(om1, v) - V1 + QV2
    return np.concatenate(
        [a1dot, b1dot, a2dot, b2dot, Qdot.reshape(y.shape[:-1] + (9,)), vdot], axis=-1
    )


def se3_casimirs(state):
    """The two invariants (alpha_bar . beta_bar, |beta_bar|^2) of the coupled bracket."""
    y = _as_flat(state, SE3_DIM)
    a1, b1, a2, b2, Q, v = _split_se3(y)
    qb2 = np.einsum("...ij,...j->...i", Q, b2)
    beta_bar = b1 + qb2
    alpha_bar = a1 + np.einsum("...ij,...j->...i", Q, a2) + np.cross(v, qb2)
    c1 = np.sum(alpha_bar * beta_bar, axis=-1)
    c2 = np.sum(beta_bar * beta_bar, axis=-1)
    return np.stack([c1, c2], axis=-1)


def se3_field_from_partials(dh_da1, dh_db1, dh_da2, dh_db2, dh_dQ, dh_dv):
    """Equations of motion for an arbitrary SE(3)-pair Hamiltonian given its partials.

    Each callable receives the unpacked single state (a1, b1, a2, b2, Q, v);
    ``dh_dQ`` returns the component-wise 3x3 derivative matrix.
    """

    def field(y):
        y = np.asarray(y, dtype=float)
        parts = _split_se3(y)
        a1, b1, a2, b2, Q, v = parts
        om1 = np.asarray(dh_da1(*parts), dtype=float)
        V1 = np.asarray(dh_db1(*parts), dtype=float)
        om2 = np.asarray(dh_da2(*parts), dtype=float)
        V2 = np.asarray(dh_db2(*parts), dtype=float)
        D = np.asarray(dh_dQ(*parts), dtype=float)
        W = np.asarray(dh_dv(*parts), dtype=float)
        a1dot = -np.cross(om1, a1) - np.cross(V1, b1) + 2.0 * vee(D @ Q.T) + np.cross(v, W)
        b1dot = -np.cross(om1, b1) + W
        a2dot = -np.cross(om2, a2) - np.cross(V2, b2) - 2.0 * vee(Q.T @ D)
        b2dot = -np.cross(om2, b2) - Q.T @ W
        Qdot = -hat(om1) @ Q + Q @ hat(om2)
        vdot = -np.cross(om1, v) - V1 + Q @ V2
        return np.concatenate([a1dot, b1dot, a2dot, b2dot, Qdot.reshape(9), vdot])

    return field


def se3_field_from_hamiltonian(h, step=1e-6):
    """Finite-difference fallback for user-supplied Hamiltonians h(flat state)."""

    def field(y):
        y = np.asarray(y, dtype=float)
        a1, b1, a2, b2, Q, v = _split_se3(y)
        om1 = _block_fd(h, y, 0, 3, step)
        V1 = _block_fd(h, y, 3, 3, step)
        om2 = _block_fd(h, y, 6, 3, step)
        V2 = _block_fd(h, y, 9, 3, step)
        D = _block_fd(h, y, 12, 9, step).reshape(3, 3)
        W = _block_fd(h, y, 21, 3, step)
        a1dot = -np.cross(om1, a1) - np.cross(V1, b1) + 2.0 * vee(D @ Q.T) + np.cross(v, W)
        b1dot = -np.cross(om1, b1) + W
        a2dot = -np.cross(om2, a2) - np.cross(V2, b2) - 2.0 * vee(Q.T @ D)
        b2dot = -np.cross(om2, b2) - Q.T @ W
        Qdot = -hat(om1) @ Q + Q @ hat(om2)
        vdot = -np.cross(om1, v) - V1 + Q @ V2
        return np.concatenate([a1dot, b1dot, a2dot, b2dot, Qdot.reshape(9), vdot])

    return field


# ---------------------------------------------------------------------------
# planar (SO(2)) reduction of the coupled SO(3) bodies
# ---------------------------------------------------------------------------


def so2_embed(state):
    """Embed [mu1, mu2, Phi] into the full so3 state with vertical momenta and p = Rz(Phi)."""
    y = _as_flat(state, SO2_DIM)
    scalar = y.ndim == 1
    y = np.atleast_2d(y)
    n = y.shape[0]
    out = np.zeros((n, SO3_DIM))
    out[:, 2] = y[:, 0]
    out[:, 5] = y[:, 1]
    c = np.cos(y[:, 2])
    s = np.sin(y[:, 2])
    out[:, 6] = c
    out[:, 7] = -s
    out[:, 9] = s
    out[:, 10] = c
    out[:, 14] = 1.0
    return out[0] if scalar else out


def _check_planar(params: SO3CoupledParams):
    if np.any(params._xi1[:, 2] != 0.0) or np.any(params._xi2[:, 2] != 0.0):
        raise ValueError("planar reduction requires all charges in the E1-E2 plane")


def so2_vector_field(state, params: SO3CoupledParams):
    """Reduced equations: antisymmetric torque on the momenta, angle driven by their mismatch.

    The torque is read off the embedded full system instead of re-deriving a
    closed form, which keeps the Coulomb algebra in one place.
    """
    _check_planar(params)
    y = _as_flat(state, SO2_DIM)
    full = so3_vector_field(so2_embed(y), params)
    torque = full[..., 2]
    phidot = -(y[..., 0] / params.inertia1[2] - y[..., 1] / params.inertia2[2])
    return np.stack([torque, -torque, phidot], axis=-1)


def so2_hamiltonian(state, params: SO3CoupledParams):
    _check_planar(params)
    return so3_hamiltonian(so2_embed(state), params)


def so2_casimir(state):
    """mu1 + mu2, the vertical component of the total angular momentum."""
    y = _as_flat(state, SO2_DIM)
    c = y[..., 0] + y[..., 1]
    return c if np.ndim(c) else float(c)


# ---------------------------------------------------------------------------
# generic Casimir composer and the altered Hamiltonian
# ---------------------------------------------------------------------------


def casimir_from_algebra(base_casimir, state):
    """Lift a single-group Casimir to the coupled system: C_g(mu1 + Ad*_{p^{-1}} mu2).

    ``base_casimir`` receives the combined single-body momentum: a 3-vector
    for the so3 case, the stacked 6-vector [alpha, beta] for se3, and the
    scalar mu1 + mu2 for the planar case.
    """
    if hasattr(state, "flat") and not isinstance(state, np.ndarray):
        y = np.asarray(state.flat(), dtype=float)
    else:
        y = np.asarray(state, dtype=float)
    if y.shape[-1] == SO3_DIM:
        mu1, mu2, p = _split_so3(y)
        return base_casimir(mu1 + coad_so3_group(p, mu2))
    if y.shape[-1] == SE3_DIM:
        a1, b1, a2, b2, Q, v = _split_se3(y)
        A, B = coad_se3_group(SE3Element(Q, v), a2, b2)
        return base_casimir(np.concatenate([a1 + A, b1 + B]))
    if y.shape[-1] == SO2_DIM:
        return base_casimir(y[0] + y[1])
    raise ValueError(f"unrecognized state dimension {y.shape[-1]}")


@dataclass(frozen=True)
class ZetaWrapper:
    """Softening parameter of the altered Hamiltonian h_alt = tanh(zeta * h) / zeta."""

    zeta: float

    def __post_init__(self):
        if not self.zeta > 0:
            raise ValueError("zeta must be positive")


def altered_hamiltonian(zeta, base_hamiltonian):
    """Return h_alt(y) = tanh(zeta * h(y)) / zeta."""
    z = ZetaWrapper(zeta).zeta

    def h_alt(y):
        return np.tanh(z * base_hamiltonian(y)) / z

    return h_alt


def altered_field(zeta, base_field, base_hamiltonian):
    """Vector field of the altered Hamiltonian.

    By the chain rule the field is the base one scaled pointwise by
    sech^2(zeta * h), a factor in (0, 1]: same trajectories, deformed clock.
    """
    z = ZetaWrapper(zeta).zeta

    def field(y):
        t = np.tanh(z * np.asarray(base_hamiltonian(y)))
        scale = 1.0 - t * t
        return base_field(y) * np.expand_dims(scale, -1) if np.ndim(t) else base_field(y) * scale

    return field


# ---------------------------------------------------------------------------
# JSON (de)serialization of system parameters
# ---------------------------------------------------------------------------


def params_to_json(case, params, zeta=None):
    """One schema for all cases; inapplicable keys are null."""
    doc = {
        "case": case,
        "inertia1": list(params.inertia1),
        "inertia2": list(params.inertia2),
        "charges": None,
        "masses": None,
        "P_diag": None,
        "L_diag": None,
        "zeta": zeta,
    }
    if isinstance(params, SO3CoupledParams):
        doc["charges"] = {
            "body1": [[q, list(xi)] for q, xi in params.charges1],
            "body2": [[q, list(xi)] for q, xi in params.charges2],
        }
    elif isinstance(params, SE3CoupledParams):
        doc["masses"] = [params.m1, params.m2]
        doc["P_diag"] = list(params.P_diag)
        doc["L_diag"] = list(params.L_diag)
    else:
        raise TypeError(f"unsupported parameter record {type(params)!r}")
    return doc


def params_from_json(doc):
    """Inverse of :func:`params_to_json`; returns (case, params, zeta)."""
    case = doc["case"]
    zeta = doc.get("zeta")
    if case in ("so3", "so2"):
        ch = doc["charges"]
        params = SO3CoupledParams(
            inertia1=np.asarray(doc["inertia1"], dtype=float),
            inertia2=np.asarray(doc["inertia2"], dtype=float),
            charges1=tuple((q, np.asarray(xi, dtype=float)) for q, xi in ch["body1"]),
            charges2=tuple((q, np.asarray(xi, dtype=float)) for q, xi in ch["body2"]),
        )
    elif case == "se3":
        m1, m2 = doc["masses"]
        params = SE3CoupledParams(
            inertia1=np.asarray(doc["inertia1"], dtype=float),
            inertia2=np.asarray(doc["inertia2"], dtype=float),
            m1=float(m1),
            m2=float(m2),
            P_diag=np.asarray(doc["P_diag"], dtype=float),
            L_diag=np.asarray(doc["L_diag"], dtype=float),
        )
    else:
        raise ValueError(f"unknown case {case!r}")
    return case, params, zeta
