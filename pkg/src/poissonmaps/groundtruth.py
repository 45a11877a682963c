"""High-accuracy reference integration and dataset generation.

The reference integrator is an adaptive embedded Dormand-Prince pair
(scipy's DOP853 by default, RK45 available) run at rtol 1e-10 / atol 1e-12.
The systems here are smooth and non-stiff, so an explicit pair at these
tolerances reproduces the conservation quality the data protocol needs;
Casimir drift of the reference solution over t = 500 stays at the 1e-8
level, which the acceptance tests pin down.

Datasets follow the standard protocol: 20 trajectories of 51 states at
spacing 0.1 (1000 supervision pairs), initial conditions drawn uniformly
from case-specific ranges. All randomness flows from one 64-bit seed
through counter-based per-trajectory generators, so generation is
bit-reproducible and trajectory-order independent.

File formats: datasets are JSON Lines (one trajectory per line with keys
case, dt, t0, states) next to a manifest JSON holding the sampler
configuration, the system parameters and the library version.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ._version import __version__
from .lie import rot

STATE_DIM = {"so2": 3, "so3": 15, "se3": 24}


class IntegrationError(RuntimeError):
    pass


class StepSizeError(IntegrationError):
    """The controller drove the step size below the stiffness/singularity floor."""


class DivergenceError(IntegrationError):
    """The solution left the finite range."""


@dataclass
class Trajectory:
    """A time-ordered sequence of flattened states on a uniform grid."""

    case: str
    dt: float
    t0: float
    states: np.ndarray

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or len(self.states) < 2:
            raise ValueError("a trajectory needs at least two states of equal dimension")

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(len(self.states))

    def to_json(self):
        return {"case": self.case, "dt": self.dt, "t0": self.t0, "states": self.states.tolist()}

    @classmethod
    def from_json(cls, doc):
        return cls(case=doc["case"], dt=doc["dt"], t0=doc["t0"], states=np.asarray(doc["states"]))


@dataclass(frozen=True)
class DataPair:
    """One supervision pair: states separated by dt along a reference trajectory."""

    state_in: np.ndarray
    state_out: np.ndarray
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class SamplerConfig:
    """Initial-condition ranges and trajectory layout for dataset generation."""

    case: str
    n_traj: int = 20
    n_steps: int = 51
    dt: float = 0.1
    seed: int = 0
    momentum_range: tuple = (-2.0, 2.0)
    beta_range: tuple | None = None  # se3 linear momenta; defaults to momentum_range
    angle_range: tuple = (-np.pi / 2, np.pi / 2)
    translation_range: tuple = (-np.pi / 2, np.pi / 2)

    def __post_init__(self):
        if self.case not in STATE_DIM:
            raise ValueError(f"unknown case {self.case!r}")
        if self.n_traj < 1 or self.n_steps < 1:
            raise ValueError("n_traj and n_steps must be >= 1")
        for name in ("momentum_range", "beta_range", "angle_range", "translation_range"):
            r = getattr(self, name)
            if r is None:
                continue
            if not r[0] < r[1]:
                raise ValueError(f"{name} must be well-ordered")

    @classmethod
    def train_protocol(cls, case, seed=0, n_traj=20, n_steps=51, dt=0.1):
        """Training ranges: momenta in (-2,2), angles in (-pi/2,pi/2) (so2: (0,2pi))."""
        if case == "so2":
            return cls(case, n_traj, n_steps, dt, seed, (-2.0, 2.0), None, (0.0, 2 * np.pi))
        if case == "so3":
            return cls(case, n_traj, n_steps, dt, seed)
        return cls(case, n_traj, n_steps, dt, seed)

    @classmethod
    def eval_protocol(cls, case, seed=0, n_traj=1, n_steps=2, dt=0.1):
        """Held-out ranges, tighter than training so test states were never observed."""
        if case == "so2":
            return cls(case, n_traj, n_steps, dt, seed, (-1.0, 1.0), None, (-np.pi / 2, np.pi / 2))
        if case == "so3":
            return cls(case, n_traj, n_steps, dt, seed, (-1.0, 1.0), None, (-np.pi / 2, np.pi / 2))
        return cls(
            case, n_traj, n_steps, dt, seed, (-2.0, 2.0), (-1.0, 1.0), (-np.pi / 4, np.pi / 4),
            (-0.5, 0.5),
        )


def integrate(field, y0, t_end, rtol=1e-10, atol=1e-12, *, t0=0.0, n_out=None,
              method="DOP853", case="custom", max_step=np.inf, first_step=None):
    """Adaptive embedded Runge-Kutta integration sampled on a uniform grid.

    ``field`` maps a flat state to its derivative. With ``n_out`` the output
    grid has n_out+1 points including both endpoints (grid values come from
    the method's dense-output interpolant); without it only the endpoints
    are returned.
    """
    if not (rtol > 0 and atol > 0):
        raise ValueError("rtol and atol must be positive")
    y0 = np.asarray(y0, dtype=float)
    if n_out is None:
        n_out = 1
    t_eval = np.linspace(t0, t_end, n_out + 1)
    sol = solve_ivp(
        lambda t, y: field(y),
        (t0, t_end),
        y0,
        method=method,
        rtol=rtol,
        atol=atol,
        t_eval=t_eval,
        max_step=max_step,
        first_step=first_step,
        dense_output=False,
    )
    if not sol.success:
        msg = sol.message or "integration failed"
        if "step size" in msg.lower() or "too small" in msg.lower():
            raise StepSizeError(msg)
        raise IntegrationError(msg)
    states = sol.y.T
    if not np.all(np.isfinite(states)):
        raise DivergenceError("integration produced non-finite states")
    return Trajectory(case=case, dt=(t_end - t0) / n_out, t0=t0, states=states)


def _random_unit_vector(rng):
    while True:
        v = rng.standard_normal(3)
        n = np.linalg.norm(v)
        if n > 1e-8:
            return v / n


def sample_initial(case, config: SamplerConfig, rng):
    """Draw one flattened initial state from the configured ranges."""
    lo, hi = config.momentum_range
    if case == "so2":
        mu = rng.uniform(lo, hi, size=2)
        phi = rng.uniform(*config.angle_range)
        return np.array([mu[0], mu[1], phi])
    if case == "so3":
        mu = rng.uniform(lo, hi, size=6)
        p = rot(_random_unit_vector(rng), rng.uniform(*config.angle_range))
        return np.concatenate([mu, p.reshape(9)])
    if case == "se3":
        blo, bhi = config.beta_range if config.beta_range is not None else (lo, hi)
        a1 = rng.uniform(lo, hi, size=3)
        b1 = rng.uniform(blo, bhi, size=3)
        a2 = rng.uniform(lo, hi, size=3)
        b2 = rng.uniform(blo, bhi, size=3)
        Q = rot(_random_unit_vector(rng), rng.uniform(*config.angle_range))
        v = rng.uniform(*config.translation_range, size=3)
        return np.concatenate([a1, b1, a2, b2, Q.reshape(9), v])
    raise ValueError(f"unknown case {case!r}")


def _trajectory_rng(seed, index):
    """Counter-based child generator for one trajectory; independent of evaluation order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def generate_dataset(system, config: SamplerConfig, rtol=1e-10, atol=1e-12):
    """Integrate ``config.n_traj`` reference trajectories and split them into pairs.

    ``system`` provides ``case`` and ``field`` (see :mod:`poissonmaps.cases`).
    Returns (pairs, trajectories).
    """
    if system.case != config.case:
        raise ValueError(f"system case {system.case!r} != sampler case {config.case!r}")
    if config.n_steps < 2:
        raise ValueError("dataset generation needs n_steps >= 2 to form pairs")
    trajectories = []
    for k in range(config.n_traj):
        rng = _trajectory_rng(config.seed, k)
        y0 = sample_initial(config.case, config, rng)
        t_end = (config.n_steps - 1) * config.dt
        try:
            traj = integrate(
                system.field, y0, t_end, rtol=rtol, atol=atol,
                n_out=config.n_steps - 1, case=config.case,
            )
        except IntegrationError as exc:
            raise IntegrationError(f"trajectory {k} failed: {exc}") from exc
        trajectories.append(traj)
    return trajectories_to_pairs(trajectories), trajectories


def trajectories_to_pairs(trajectories):
    pairs = []
    for traj in trajectories:
        for a, b in zip(traj.states[:-1], traj.states[1:]):
            pairs.append(DataPair(a, b, traj.dt))
    return pairs


def pairs_to_arrays(pairs):
    """Stack pairs into (X, Y, dt) arrays; all pairs must share the same dt."""
    if not pairs:
        raise ValueError("no pairs")
    dts = {p.dt for p in pairs}
    if len(dts) != 1:
        raise ValueError("pairs mix different time spacings")
    X = np.array([p.state_in for p in pairs])
    Y = np.array([p.state_out for p in pairs])
    return X, Y, dts.pop()


def manifest_path_for(dataset_path):
    s = str(dataset_path)
    if s.endswith(".jsonl"):
        return s[: -len(".jsonl")] + ".manifest.json"
    return s + ".manifest.json"


def save_dataset(path, trajectories, config: SamplerConfig, system_doc=None):
    """Write the JSONL dataset and its companion manifest; returns the manifest path."""
    with open(path, "w") as fh:
        for traj in trajectories:
            fh.write(json.dumps(traj.to_json()))
            fh.write("\n")
    manifest = {
        "config": asdict(config),
        "system": system_doc,
        "version": __version__,
        "n_trajectories": len(trajectories),
        "n_pairs": sum(len(t.states) - 1 for t in trajectories),
    }
    mpath = manifest_path_for(path)
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return mpath


def load_dataset(path):
    """Read a JSONL dataset (and its manifest, when present) back."""
    trajectories = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                trajectories.append(Trajectory.from_json(json.loads(line)))
    manifest = None
    try:
        with open(manifest_path_for(path)) as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        pass
    return trajectories, manifest
