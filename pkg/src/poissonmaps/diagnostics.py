"""Quantitative evaluation: conservation series, error growth, Lyapunov exponents.

The metrics mirror the standard structure-preservation plots: per-step
Casimir values (flat to rounding for the learned propagator, ~1e-8 for the
reference integrator), energy series, and the mean absolute error between a
learned rollout and the reference trajectory, whose growth rate in a chaotic
regime is bounded below by the leading Lyapunov exponent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .cases import MAE_COMPONENTS, System
from .groundtruth import Trajectory, integrate


@dataclass
class MetricsSeries:
    """Aligned per-step diagnostics for one trajectory."""

    t: np.ndarray
    casimirs: np.ndarray  # (n, n_casimirs)
    energy: np.ndarray
    mae: np.ndarray | None
    source: str

    def __post_init__(self):
        n = len(self.t)
        if len(self.casimirs) != n or len(self.energy) != n:
            raise ValueError("metric series must share one grid")
        if self.mae is not None and len(self.mae) != n:
            raise ValueError("metric series must share one grid")

    def casimir_drift(self):
        """Max relative drift |C(t) - C(0)| / max(|C(0)|, 1) per Casimir."""
        c0 = self.casimirs[0]
        scale = np.maximum(np.abs(c0), 1.0)
        return np.max(np.abs(self.casimirs - c0), axis=0) / scale


@dataclass(frozen=True)
class LyapunovEstimate:
    lam: float
    delta0: float
    horizon: float
    renorm_dt: float


def casimir_series(traj: Trajectory, system: System):
    """Casimir value(s) at every step, shape (n, n_casimirs)."""
    return system.casimirs(traj.states)


def energy_series(traj: Trajectory, system: System):
    """Conserved energy at every step (the altered Hamiltonian when zeta is set)."""
    return np.asarray(system.hamiltonian(traj.states))


def mae_components(case, all_components=False):
    if all_components:
        from .cases import STATE_DIM

        return tuple(range(STATE_DIM[case]))
    return MAE_COMPONENTS[case]


def mae_series(traj: Trajectory, ref: Trajectory, components=None):
    """Per-step mean absolute error over the compared components.

    By default the comparison uses the momenta (plus the first row of the
    relative orientation for so3); pass explicit component indices or
    ``mae_components(case, all_components=True)`` to override.
    """
    if traj.states.shape != ref.states.shape:
        raise ValueError("trajectories must share one grid")
    if abs(traj.dt - ref.dt) > 1e-12 or abs(traj.t0 - ref.t0) > 1e-12:
        raise ValueError("trajectories must share one grid")
    if components is None:
        components = mae_components(traj.case)
    idx = np.asarray(components, dtype=int)
    return np.mean(np.abs(traj.states[:, idx] - ref.states[:, idx]), axis=1)


def lyapunov(
    system: System,
    state0,
    delta0=1e-8,
    horizon=200.0,
    renorm_dt=1.0,
    rtol=1e-8,
    atol=1e-10,
    seed=0,
) -> LyapunovEstimate:
    """Leading Lyapunov exponent by the two-trajectory renormalization method.

    A companion trajectory offset by delta0 is integrated alongside the
    reference; every renorm_dt the separation is rescaled back to delta0 and
    its log-growth accumulated: lambda = sum(log(d_i/delta0)) / horizon.
    """
    if not (1e-10 <= delta0 <= 1e-6):
        raise ValueError("delta0 should be in [1e-10, 1e-6]")
    n_seg = int(round(horizon / renorm_dt))
    if n_seg < 2:
        raise ValueError("horizon must cover several renormalization intervals")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    y = np.asarray(state0, dtype=float)
    direction = rng.standard_normal(y.shape)
    direction /= np.linalg.norm(direction)
    yp = y + delta0 * direction
    log_sum = 0.0
    for _ in range(n_seg):
        y = integrate(system.field, y, renorm_dt, rtol=rtol, atol=atol).states[-1]
        yp = integrate(system.field, yp, renorm_dt, rtol=rtol, atol=atol).states[-1]
        diff = yp - y
        d = np.linalg.norm(diff)
        log_sum += np.log(d / delta0)
        yp = y + (delta0 / d) * diff
    return LyapunovEstimate(
        lam=log_sum / (n_seg * renorm_dt), delta0=delta0, horizon=n_seg * renorm_dt,
        renorm_dt=renorm_dt,
    )


def fit_exponent(t, values, saturation_fraction=0.6, t_min=None, floor=1e-300):
    """Least-squares exponent of values ~ A * exp(k t) over the growth phase.

    The fit window runs from ``t_min`` (default: the first positive time) to
    the first sample reaching ``saturation_fraction`` of the maximum, so the
    flat saturated tail does not bias the slope. Returns (A, k).
    """
    t = np.asarray(t, dtype=float)
    values = np.maximum(np.asarray(values, dtype=float), floor)
    vmax = values.max()
    beyond = np.nonzero(values >= saturation_fraction * vmax)[0]
    stop = beyond[0] + 1 if len(beyond) else len(values)
    mask = np.zeros(len(t), dtype=bool)
    mask[1:stop] = True
    if t_min is not None:
        mask &= t >= t_min
    if mask.sum() < 5:  # degenerate window: fall back to the whole growth phase
        mask[:] = False
        mask[1:stop] = True
    if mask.sum() < 2:
        mask[1:] = True
    k, loga = np.polyfit(t[mask], np.log(values[mask]), 1)
    return float(np.exp(loga)), float(k)


def mae_growth_exponent(t, mae, lam, saturation_fraction=0.6):
    """Growth exponent of an error series, measured in its exponential regime.

    Before one Lyapunov time the error of a learned one-step map reflects
    its per-step bias floor (log-slope ~ 1/t however weak the chaos), and
    after saturation the curve flattens at the attractor diameter; the
    window [1/lam, saturation onset] is where exponential amplification of
    accumulated error is observable. Outside chaotic regimes (lam <= 0) the
    whole pre-saturation phase is used.
    """
    t_min = 1.0 / lam if lam > 0 else None
    _, k = fit_exponent(t, mae, saturation_fraction=saturation_fraction, t_min=t_min)
    return k


def envelope_constant(t, mae, lam):
    """Smallest A with mae(t) <= A * exp(lam * t) over the whole series."""
    t = np.asarray(t, dtype=float)
    mae = np.asarray(mae, dtype=float)
    return float(np.max(mae * np.exp(-lam * t)))


def compare(network, params, system: System, state0, n_steps, csv_path=None, components=None):
    """Roll out the learned map and the reference field from one state.

    Returns (model_series, truth_series); the model series carries the MAE
    against the reference. With ``csv_path`` the aligned metrics are written
    as CSV rows (t, C1[, C2], energy, mae, source).
    """
    state0 = np.asarray(state0, dtype=float)
    model_traj = network.rollout(params, state0, n_steps)
    truth_traj = integrate(
        system.field, state0, n_steps * network.spec.dt, n_out=n_steps, case=system.case
    )
    mae = mae_series(model_traj, truth_traj, components=components)
    t = model_traj.times
    model_series = MetricsSeries(
        t=t,
        casimirs=casimir_series(model_traj, system),
        energy=energy_series(model_traj, system),
        mae=mae,
        source="model",
    )
    truth_series = MetricsSeries(
        t=t,
        casimirs=casimir_series(truth_traj, system),
        energy=energy_series(truth_traj, system),
        mae=None,
        source="truth",
    )
    if csv_path is not None:
        write_metrics_csv(csv_path, [model_series, truth_series])
    return model_series, truth_series


def write_metrics_csv(path, series_list):
    n_cas = series_list[0].casimirs.shape[1]
    header = ["t"] + [f"C{k + 1}" for k in range(n_cas)] + ["energy", "mae", "source"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for series in series_list:
            for i, t in enumerate(series.t):
                row = [f"{t:.10g}"]
                row += [f"{c:.16g}" for c in series.casimirs[i]]
                row.append(f"{series.energy[i]:.16g}")
                row.append("" if series.mae is None else f"{series.mae[i]:.16g}")
                row.append(series.source)
                writer.writerow(row)
