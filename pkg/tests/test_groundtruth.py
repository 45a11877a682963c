import json

import numpy as np
import pytest

from poissonmaps import systems as S
from poissonmaps.cases import make_system
from poissonmaps.groundtruth import (
    DataPair,
    DivergenceError,
    SamplerConfig,
    Trajectory,
    generate_dataset,
    integrate,
    load_dataset,
    pairs_to_arrays,
    sample_initial,
    save_dataset,
    trajectories_to_pairs,
)
from poissonmaps.lie import rotation_defect


def _rng(seed=0):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def test_integrate_free_body_principal_axis_constant():
    sysx = make_system("so3", S.SO3CoupledParams.free())
    y0 = np.concatenate([[0.0, 0.0, 2.0], np.zeros(3), np.eye(3).reshape(9)])
    traj = integrate(sysx.field, y0, 10.0, n_out=100)
    assert np.max(np.abs(traj.states[:, 0:6] - y0[0:6])) <= 1e-11


def test_integrate_self_convergence():
    sysx = make_system("so3")
    rng = _rng(1)
    y0 = sample_initial("so3", SamplerConfig.train_protocol("so3"), rng)
    ends = {}
    for rtol in (1e-6, 1e-8, 1e-10):
        ends[rtol] = integrate(sysx.field, y0, 20.0, rtol=rtol, atol=rtol * 1e-2).states[-1]
    coarse = np.max(np.abs(ends[1e-6] - ends[1e-8]))
    fine = np.max(np.abs(ends[1e-8] - ends[1e-10]))
    assert fine < coarse
    assert fine < 10.0 * coarse * 1e-2  # tightening 100x gains at least ~10x


def test_integrator_empirical_order_at_least_four():
    # fixed-step runs (step control disabled via huge tolerances + max_step)
    sysx = make_system("so3", S.SO3CoupledParams.free())
    rng = _rng(2)
    y0 = sample_initial("so3", SamplerConfig.train_protocol("so3"), rng)
    ref = integrate(sysx.field, y0, 5.0, rtol=1e-13, atol=1e-13).states[-1]

    def fixed_step_endpoint(h):
        traj = integrate(
            sysx.field, y0, 5.0, rtol=1e6, atol=1e6, max_step=h, first_step=h
        )
        return traj.states[-1]

    e1 = np.max(np.abs(fixed_step_endpoint(0.25) - ref))
    e2 = np.max(np.abs(fixed_step_endpoint(0.125) - ref))
    assert e2 > 0
    assert e1 / e2 >= 2**4  # halving the step gains >= 2^(order-1) with order >= 5


def test_integrate_rejects_bad_tolerances():
    sysx = make_system("so2")
    with pytest.raises(ValueError):
        integrate(sysx.field, np.zeros(3), 1.0, rtol=0.0)


def test_integrate_divergence_error():
    blowup = lambda y: y * y + 1.0
    with pytest.raises(Exception):
        integrate(blowup, np.array([1.0]), 10.0)


def test_sampler_determinism():
    cfg = SamplerConfig.train_protocol("so3", seed=7)
    a = sample_initial("so3", cfg, _rng(7))
    b = sample_initial("so3", cfg, _rng(7))
    assert np.array_equal(a, b)


def test_sampler_statistics_and_manifold():
    cfg = SamplerConfig.train_protocol("so3", seed=0)
    rng = _rng(0)
    samples = np.array([sample_initial("so3", cfg, rng) for _ in range(10000)])
    momenta = samples[:, 0:6]
    assert np.all(np.abs(momenta.mean(axis=0)) < 0.05)
    assert momenta.min() >= -2.0 and momenta.max() <= 2.0
    for k in range(0, 10000, 997):
        assert rotation_defect(samples[k, 6:15].reshape(3, 3)) <= 1e-12


def test_sampler_eval_ranges_se3():
    cfg = SamplerConfig.eval_protocol("se3", seed=3)
    rng = _rng(3)
    ys = np.array([sample_initial("se3", cfg, rng) for _ in range(500)])
    assert np.max(np.abs(ys[:, 0:3])) <= 2.0  # alpha1
    assert np.max(np.abs(ys[:, 3:6])) <= 1.0  # beta1
    assert np.max(np.abs(ys[:, 21:24])) <= 0.5  # v


def test_sampler_unknown_case():
    with pytest.raises(ValueError):
        SamplerConfig(case="su2")
    cfg = SamplerConfig.train_protocol("so2")
    with pytest.raises(ValueError):
        sample_initial("su2", cfg, _rng(0))


def test_generate_dataset_pair_counts():
    sysx = make_system("so2")
    pairs, trajs = generate_dataset(sysx, SamplerConfig.train_protocol("so2", seed=1))
    assert len(trajs) == 20 and all(len(t.states) == 51 for t in trajs)
    assert len(pairs) == 1000
    pairs1, trajs1 = generate_dataset(
        sysx, SamplerConfig.train_protocol("so2", seed=1, n_traj=1, n_steps=2)
    )
    assert len(pairs1) == 1
    end = integrate(sysx.field, trajs1[0].states[0], 0.1).states[-1]
    assert np.allclose(pairs1[0].state_out, end, atol=1e-12)


def test_generate_dataset_casimir_consistency():
    sysx = make_system("so3")
    pairs, _ = generate_dataset(
        sysx, SamplerConfig.train_protocol("so3", seed=2, n_traj=4, n_steps=11)
    )
    for pair in pairs:
        c_in = sysx.casimirs(pair.state_in)
        c_out = sysx.casimirs(pair.state_out)
        assert np.max(np.abs(c_in - c_out)) <= 1e-8 * max(1.0, np.max(np.abs(c_in)))


def test_generate_dataset_bit_reproducible(tmp_path):
    sysx = make_system("so2")
    cfg = SamplerConfig.train_protocol("so2", seed=11, n_traj=3, n_steps=5)
    _, trajs_a = generate_dataset(sysx, cfg)
    _, trajs_b = generate_dataset(sysx, cfg)
    for a, b in zip(trajs_a, trajs_b):
        assert np.array_equal(a.states, b.states)
    pa = tmp_path / "a.jsonl"
    pb = tmp_path / "b.jsonl"
    save_dataset(pa, trajs_a, cfg, sysx.to_json())
    save_dataset(pb, trajs_b, cfg, sysx.to_json())
    assert pa.read_bytes() == pb.read_bytes()


def test_dataset_roundtrip(tmp_path):
    sysx = make_system("se3")
    cfg = SamplerConfig.train_protocol("se3", seed=4, n_traj=2, n_steps=3)
    _, trajs = generate_dataset(sysx, cfg)
    path = tmp_path / "data.jsonl"
    mpath = save_dataset(path, trajs, cfg, sysx.to_json())
    back, manifest = load_dataset(path)
    assert len(back) == 2
    for a, b in zip(trajs, back):
        assert a.case == b.case and a.dt == b.dt
        assert np.array_equal(a.states, b.states)
    with open(mpath) as fh:
        m2 = json.load(fh)
    assert manifest == m2
    assert manifest["config"]["seed"] == 4
    assert manifest["n_pairs"] == 4
    assert manifest["system"]["case"] == "se3"


def test_trajectory_and_pair_validation():
    with pytest.raises(ValueError):
        Trajectory("so2", 0.1, 0.0, np.zeros((1, 3)))
    with pytest.raises(ValueError):
        DataPair(np.zeros(3), np.zeros(3), 0.0)
    traj = Trajectory("so2", 0.5, 1.0, np.zeros((3, 3)))
    assert np.allclose(traj.times, [1.0, 1.5, 2.0])


def test_pairs_to_arrays_rejects_mixed_dt():
    pairs = [DataPair(np.zeros(3), np.ones(3), 0.1), DataPair(np.zeros(3), np.ones(3), 0.2)]
    with pytest.raises(ValueError):
        pairs_to_arrays(pairs)
    arrs = pairs_to_arrays(trajectories_to_pairs([Trajectory("so2", 0.1, 0.0, np.eye(3))]))
    assert arrs[0].shape == (2, 3) and arrs[2] == 0.1
