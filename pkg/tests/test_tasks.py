import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qcds import tasks
from qcds.tasks import InvalidSpec, TaskSpec


def test_spiral_dataset_balanced_and_bounded():
    ds = tasks.generate(TaskSpec("spiral", W=3.5, r_max=8.7), 512, 0)
    assert len(ds) == 512
    assert np.sum(ds.labels == 0) == 256 and np.sum(ds.labels == 1) == 256
    assert np.max(np.abs(ds.alphas)) <= 8.7
    assert len(ds.class_a) == len(ds.class_b) == 256


def test_generation_deterministic():
    spec = TaskSpec("spiral", W=2.0)
    a = tasks.generate(spec, 64, 5)
    b = tasks.generate(spec, 64, 5)
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()
    assert tasks.generate(spec, 64, 6).to_csv() != a.to_csv()


def test_train_test_differ():
    tr, te = tasks.train_test(TaskSpec("spiral"), 32, 0)
    assert tr.role == "train" and te.role == "test"
    assert not np.allclose(tr.alphas, te.alphas)


def test_spiral_point_endpoints():
    p = tasks.spiral_point("A", 0.0, 3.0, 8.7)
    assert p == pytest.approx(0.08 * 8.7)
    q = tasks.spiral_point("B", 0.0, 3.0, 8.7)
    assert q == pytest.approx(-0.08 * 8.7)
    assert abs(tasks.spiral_point("A", 1.0, 3.0, 8.7)) == pytest.approx(8.7)
    with pytest.raises(ValueError):
        tasks.spiral_point("A", 1.5, 1.0, 8.7)


@given(st.floats(0, 1), st.floats(0.1, 5), st.floats(-3, 3))
def test_spiral_radius_clipped(t, W, jitter):
    r = abs(tasks.spiral_point("A", t, W, 8.7, jitter=jitter))
    assert 0 <= r <= 8.7 + 1e-12


def test_low_winding_linearly_separable():
    ds = tasks.generate(TaskSpec("spiral", W=0.5), 512, 0)
    x = np.stack([ds.alphas.real, ds.alphas.imag], axis=1)
    best = -np.inf
    for ang in np.linspace(0, np.pi, 3601):
        proj = x @ np.array([np.cos(ang), np.sin(ang)])
        a, b = proj[ds.labels == 0], proj[ds.labels == 1]
        best = max(best, a.min() - b.max(), b.min() - a.max())
    assert best > 0


def test_high_winding_not_linearly_separable():
    ds = tasks.generate(TaskSpec("spiral", W=3.0), 512, 0)
    x = np.stack([ds.alphas.real, ds.alphas.imag], axis=1)
    for ang in np.linspace(0, np.pi, 721):
        proj = x @ np.array([np.cos(ang), np.sin(ang)])
        a, b = proj[ds.labels == 0], proj[ds.labels == 1]
        assert max(a.min() - b.max(), b.min() - a.max()) < 0


@pytest.mark.parametrize("kind", ["circles", "plus", "threshold", "triangle", "psi_shape", "smiley"])
def test_shape_tasks(kind):
    ds = tasks.generate(TaskSpec(kind), 200, 1)
    assert np.sum(ds.labels == 0) == 100
    assert np.max(np.abs(ds.alphas)) <= tasks.SHAPE_SCALE
    region = tasks.REGIONS[kind]
    z = ds.alphas / tasks.SHAPE_SCALE
    inside = region(z.real, z.imag)
    np.testing.assert_array_equal(inside, ds.labels == 0)


def test_threshold_region_is_half_the_disc():
    rng = np.random.default_rng(0)
    r = np.sqrt(rng.uniform(size=200_000))
    a = rng.uniform(0, 2 * np.pi, 200_000)
    assert np.mean(tasks.REGIONS["threshold"](r * np.cos(a), r * np.sin(a))) == pytest.approx(0.5, abs=0.01)


def test_two_point_and_zero_vs_pm():
    ds = tasks.generate(TaskSpec("two_point", delta=2 + 1j), 10, 0)
    np.testing.assert_allclose(ds.class_a, -(1 + 0.5j))
    np.testing.assert_allclose(ds.class_b, 1 + 0.5j)
    ds = tasks.generate(TaskSpec("zero_vs_pm", delta=1.5), 8, 0)
    np.testing.assert_allclose(ds.class_a, 0)
    np.testing.assert_allclose(sorted(ds.class_b.real), [-1.5, -1.5, 1.5, 1.5])


def test_invalid_specs():
    with pytest.raises(InvalidSpec):
        TaskSpec("moons")
    with pytest.raises(InvalidSpec):
        TaskSpec("spiral", W=0.0)
    with pytest.raises(InvalidSpec):
        tasks.generate(TaskSpec(), 7, 0)
    assert issubclass(InvalidSpec, ValueError)


def test_serialisation_round_trip():
    ds = tasks.generate(TaskSpec("spiral", W=1.5, r_max=7.2), 16, 3)
    back = tasks.LabeledDataset.from_json(ds.to_json())
    np.testing.assert_array_equal(back.alphas, ds.alphas)
    np.testing.assert_array_equal(back.labels, ds.labels)
    assert back.spec == ds.spec and back.seed == 3
    assert json.loads(ds.to_json())["spec"]["W"] == 1.5
    lines = ds.to_csv().split("\r\n")
    assert lines[0] == "alpha_x,alpha_p,label" and lines[1].endswith(",A")
    assert TaskSpec.from_dict(TaskSpec(delta=1 - 2j).to_dict()).delta == 1 - 2j
