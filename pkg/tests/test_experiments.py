import numpy as np
import pytest

from twinbeam import experiments as ex
from twinbeam.config import parse_config
from twinbeam.dataset import Dataset

from conftest import tiny_dict


def grid_dataset(n):
    return Dataset(np.column_stack([np.arange(n, dtype=float), np.ones(n)]), np.eye(4)[np.arange(n) % 4])


class TestSubsample:
    def test_spread_over_grid_order(self):
        sub = ex.subsample(grid_dataset(101), 11)
        assert sub.positions[:, 0].tolist() == list(range(0, 101, 10))

    def test_all_and_full(self):
        ds = grid_dataset(30)
        assert ex.subsample(ds, "all") is ds
        assert np.array_equal(ex.subsample(ds, 30).positions, ds.positions)

    def test_no_duplicates(self):
        for size in (1, 7, 29, 30):
            idx = ex.subsample(grid_dataset(30), size).positions[:, 0]
            assert len(set(idx)) == size

    def test_too_large(self):
        with pytest.raises(ValueError, match="exceeds"):
            ex.subsample(grid_dataset(5), 6)


@pytest.fixture(scope="module")
def cfg():
    return parse_config(tiny_dict())


def test_real_split_sizes(cfg):
    real = ex.real_dataset(cfg, 0)
    pool, test = ex.real_split(cfg, real, 0)
    assert len(pool) + len(test) == len(real) == len(ex.real_positions(cfg))


def test_seeds_change_offsets(cfg):
    a, b = ex.perturbation(cfg, 0), ex.perturbation(cfg, 1)
    assert a.beam_angle_offsets != b.beam_angle_offsets
    assert ex.perturbation(cfg, 0) == a


def test_fixed_offsets_override(cfg):
    d = tiny_dict()
    d["perturbation"] = {"beam_angle_offsets_deg": [1.0] * 6}
    spec = ex.perturbation(parse_config(d), 4)
    np.testing.assert_allclose(spec.beam_angle_offsets, np.radians(1.0))


def test_finetune_zero_is_base(cfg):
    twin = ex.twin_dataset(cfg, "uniform")
    base = ex.train_zeroshot(cfg, twin, 0)
    pool, _ = ex.real_split(cfg, ex.real_dataset(cfg, 0), 0)
    assert ex.finetune(cfg, base, pool, 0, 0) is base
    tuned = ex.finetune(cfg, base, pool, 3, 0)
    assert not np.array_equal(tuned.params.flat, base.params.flat)
    with pytest.raises(ValueError):
        ex.finetune(cfg, base, pool, len(pool) + 1, 0)


def test_nn_baseline_trace(cfg):
    twin = ex.twin_dataset(cfg, "measured")
    _, test = ex.real_split(cfg, ex.real_dataset(cfg, 0), 0)
    res = ex.nn_baseline(cfg, twin, test)
    assert len(res.twin_index) == len(test) == res.report.num_test_points
    assert np.array_equal(res.twin_labels, twin.labels[res.twin_index])
    assert res.report.accuracy[0] == np.mean(res.real_labels == res.twin_labels)
