"""Network assembly: ordered cycles of Poisson-map layers with a flat parameter vector.

Cycle compositions per case (applied left to right):

  so2: rot(body1), rot(body2), planar kick                    -> 14 params
  so3: rot(body1, axes 1..3), rot(body2, axes 1..3), kick     -> 36 params
  se3: kind1 axes 1..3, kind2 axes 1..3, kind3 axes 1..3,
       kind4 axes 1..3, kind5, kind6                          -> 63 params

A network repeats its cycle ``cycles`` times per data step; every layer in
every cycle advances the same sub-interval dt_sub = dt / cycles, so the
composition advances exactly one data spacing. Parameters are stored flat,
cycle-major then layer-major; rotation/shear layers hold (alpha, beta,
gamma), matrix kicks hold [M row-major, N row-major], the translation kick
holds [L, M, N], and the planar kick holds the 2x2 blocks [M(4), N(4)].

Because every layer is an exact Poisson map, a forward pass conserves all
Casimir invariants of its case to rounding, for any parameter values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import layers as L

LAYOUT_VERSION = 1

PARAMS_PER_CYCLE = {"so2": 14, "so3": 36, "se3": 63}
STATE_DIM = {"so2": 3, "so3": 15, "se3": 24}
DEFAULT_INIT_RANGE = {"so2": (-1.0, 1.0), "so3": (-0.1, 0.1), "se3": (-0.1, 0.1)}


class DivergenceError(RuntimeError):
    """A rollout produced a non-finite state."""


@dataclass(frozen=True)
class NetworkSpec:
    case: str
    cycles: int = 3
    dt: float = 0.1
    activation: str = "tanh"

    def __post_init__(self):
        if self.case not in PARAMS_PER_CYCLE:
            raise ValueError(f"unknown case {self.case!r}")
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        L.ActivationKind(self.activation)

    @property
    def n_params(self):
        return self.cycles * PARAMS_PER_CYCLE[self.case]

    @property
    def dim(self):
        return STATE_DIM[self.case]


def _cycle_layers(case, activation):
    if case == "so2":
        return [
            L.so2_rotation_layer(1, activation),
            L.so2_rotation_layer(2, activation),
            L.so2_kick_layer(activation),
        ]
    if case == "so3":
        out = [L.so3_rotation_layer(1, ax, activation) for ax in range(3)]
        out += [L.so3_rotation_layer(2, ax, activation) for ax in range(3)]
        out.append(L.so3_kick_layer(activation))
        return out
    out = [L.se3_rotation_layer(1, ax, activation) for ax in range(3)]
    out += [L.se3_shear_layer(1, ax, activation) for ax in range(3)]
    out += [L.se3_rotation_layer(2, ax, activation) for ax in range(3)]
    out += [L.se3_shear_layer(2, ax, activation) for ax in range(3)]
    out.append(L.se3_orientation_kick_layer(activation))
    out.append(L.se3_translation_kick_layer(activation))
    return out


class Network:
    """An ordered stack of Poisson-map layers acting on flat states."""

    def __init__(self, spec: NetworkSpec):
        self.spec = spec
        self.dim = spec.dim
        self.dt_sub = spec.dt / spec.cycles
        self.layers = []
        slices = []
        offset = 0
        for _ in range(spec.cycles):
            for layer in _cycle_layers(spec.case, spec.activation):
                self.layers.append(layer)
                slices.append(slice(offset, offset + layer.n_params))
                offset += layer.n_params
        self.param_slices = tuple(slices)
        self.n_params = offset
        assert self.n_params == spec.n_params

    def _check(self, params, x):
        params = np.asarray(params, dtype=float)
        if params.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {params.shape}")
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"state must have {self.dim} components, got shape {x.shape}")
        return params, x

    def forward(self, params, state):
        """Apply every layer of every cycle once; one data step."""
        params, x = self._check(params, state)
        single = x.ndim == 1
        y = np.atleast_2d(x)
        for layer, sl in zip(self.layers, self.param_slices):
            y = layer.forward(y, params[sl], self.dt_sub)
        return y[0] if single else y

    def forward_cached(self, params, x):
        """Batched forward keeping per-layer caches for the reverse pass."""
        params, x = self._check(params, x)
        y = np.atleast_2d(x)
        caches = []
        for layer, sl in zip(self.layers, self.param_slices):
            y, cache = layer.forward_cached(y, params[sl], self.dt_sub)
            caches.append(cache)
        return y, caches

    def vjp(self, caches, out_cotangent):
        """Reverse sweep: cotangent of the input batch and the flat parameter gradient."""
        w = np.atleast_2d(np.asarray(out_cotangent, dtype=float))
        grad = np.zeros(self.n_params)
        for layer, sl, cache in zip(
            reversed(self.layers), reversed(self.param_slices), reversed(caches)
        ):
            w, g = layer.vjp(cache, w)
            grad[sl] = g
        return w, grad

    def inverse(self, params, state):
        """Exact inverse of :meth:`forward` (layers reversed, dt negated)."""
        params, x = self._check(params, state)
        single = x.ndim == 1
        y = np.atleast_2d(x)
        for layer, sl in zip(reversed(self.layers), reversed(self.param_slices)):
            y = layer.forward(y, params[sl], -self.dt_sub)
        return y[0] if single else y

    def rollout(self, params, state0, n_steps):
        """Iterate forward ``n_steps`` times, recording every intermediate state."""
        from .groundtruth import Trajectory

        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        params, y0 = self._check(params, state0)
        if y0.ndim != 1:
            raise ValueError("rollout starts from a single state")
        if not np.all(np.isfinite(y0)):
            raise DivergenceError("non-finite state at rollout step 0")
        states = np.empty((n_steps + 1, self.dim))
        states[0] = y0
        y = y0[None, :]
        for k in range(n_steps):
            for layer, sl in zip(self.layers, self.param_slices):
                y = layer.forward(y, params[sl], self.dt_sub)
            if not np.all(np.isfinite(y)):
                raise DivergenceError(f"non-finite state at rollout step {k + 1}")
            states[k + 1] = y[0]
        return Trajectory(case=self.spec.case, dt=self.spec.dt, t0=0.0, states=states)


def build(spec: NetworkSpec) -> Network:
    return Network(spec)


def init_params(spec: NetworkSpec, rng, init_range=None):
    """I.i.d. uniform parameter draw; the default range depends on the case."""
    lo, hi = init_range if init_range is not None else DEFAULT_INIT_RANGE[spec.case]
    if not lo < hi:
        raise ValueError("init range must be well-ordered")
    return rng.uniform(lo, hi, size=spec.n_params)


def save_model(path, spec: NetworkSpec, params):
    """Write the model file: case, cycles, dt, activation, flat params, layout version."""
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.n_params,):
        raise ValueError("parameter vector does not match the network spec")
    doc = {
        "case": spec.case,
        "cycles": spec.cycles,
        "dt": spec.dt,
        "activation": spec.activation,
        "params": params.tolist(),
        "layout_version": LAYOUT_VERSION,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path):
    """Read a model file back into (Network, params)."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("layout_version") != LAYOUT_VERSION:
        raise ValueError(f"unsupported model layout version {doc.get('layout_version')!r}")
    spec = NetworkSpec(
        case=doc["case"], cycles=doc["cycles"], dt=doc["dt"], activation=doc["activation"]
    )
    params = np.asarray(doc["params"], dtype=float)
    if params.shape != (spec.n_params,):
        raise ValueError("model file parameter count does not match its spec")
    return Network(spec), params
