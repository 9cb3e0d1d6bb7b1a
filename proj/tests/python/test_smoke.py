import json

import numpy as np
import pytest

import frontlab


def test_c0_matches_canonical_profile():
    p = frontlab.IgnitionProfile(0.25, 1.0, 2.0, 0.5)
    c0 = frontlab.compute_c0(p)
    assert 0.58 < c0 < 0.59
    assert c0 < 2.0
    assert p(0.2) == 0.0 and p(1.0) == 0.0


def test_sample_site_deterministic_and_uniform_range():
    a = frontlab.sample_site(7, [1, 2])
    assert a == frontlab.sample_site(7, [1, 2])
    vals = [frontlab.sample_site(3, [k]) for k in range(2000)]
    assert 0.0 <= min(vals) and max(vals) < 1.0
    assert abs(np.mean(vals) - 0.5) < 0.03


def test_medium_envelope_bounds():
    m = frontlab.medium({"dim": 2, "g": {"kind": "hat", "radius_len": 2}, "a_map": {"kind": "identity"}}, seed=1)
    env = [m.envelope([x * 0.37, x * 0.11]) for x in range(50)]
    assert min(env) >= 1.0 and max(env) <= 2.0 + 1e-12
    assert m.envelope_bound == pytest.approx(2.0)
    assert m.reaction([0.0, 0.0], 0.1) == 0.0


def test_bad_medium_names_field():
    with pytest.raises(ValueError, match="/medium/g/radius"):
        frontlab.medium({"g": {"kind": "hat", "radius": 2}})


def test_homogeneous_front_speed_near_c0():
    row = frontlab.front_speed({}, range(8), [1.0], [32, 128])
    c0 = frontlab.compute_c0(frontlab.IgnitionProfile())
    assert abs(row["c_star"] - c0) / c0 < 0.02


def test_theta_convex_constant_speed_is_a_ball():
    dirs = [[np.cos(a), np.sin(a)] for a in np.linspace(0, 2 * np.pi, 16, endpoint=False)]
    poly = np.array(frontlab.theta_convex_polygon(dirs, [1.0] * 16, 1.0, 0.5))
    r = np.hypot(poly[:, 0], poly[:, 1])
    assert r.min() > 1.49 and r.max() < 1.51


def test_run_experiment_is_reproducible(tmp_path):
    cfg = {
        "command": "simulate",
        "medium": {"dim": 1, "g": {"kind": "hat", "radius_len": 2}, "a_map": {"kind": "identity"}},
        "seeds": [2],
        "params": {"h_len": 0.25, "lo_len": [-15], "hi_len": [15], "datum": "step",
                   "set": {"kind": "ball", "radius_len": 6}, "t_end_time": 4},
    }
    a = frontlab.run_experiment(cfg, str(tmp_path / "a"))
    b = frontlab.run_experiment(json.dumps(cfg), str(tmp_path / "b"), workers=2)
    assert a["config_hash"] == frontlab.config_hash(json.dumps(cfg))
    assert {f["path"]: f["sha256"] for f in a["files"]} == {f["path"]: f["sha256"] for f in b["files"]}
    snap = frontlab.read_field(str(tmp_path / "a" / "seed_2" / "snapshot_001.flf"))
    assert snap["t"] == pytest.approx(4.0)
    assert snap["values"].shape == (121,)
    assert 0.0 <= snap["values"].min() and snap["values"].max() <= 1.0
