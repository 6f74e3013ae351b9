import numpy as np
import pytest
from sklearn.linear_model import LogisticRegression

from dinl.task import (
    Dataset,
    TaskSpec,
    generate,
    label_balance,
    load_dataset_csv,
    save_dataset_csv,
)


def centralized_accuracy(spec: TaskSpec) -> float:
    """The independent baseline: logistic regression on concatenated observations."""
    train, _, test = generate(spec)
    model = LogisticRegression(max_iter=2000)
    model.fit(train.flat_observations(), train.labels.ravel())
    return float(model.score(test.flat_observations(), test.labels.ravel()) * 100.0)


class TestGenerate:
    def test_split_sizes_and_shapes(self):
        train, val, test = generate(TaskSpec(seed=0))
        assert (len(train), len(val), len(test)) == (120, 120, 1000)
        assert train.observations.shape == (120, 6, 2)
        assert train.labels.shape == (120, 1)
        assert set(np.unique(test.labels)) <= {0.0, 1.0}

    def test_identical_seeds_identical_data(self):
        a = generate(TaskSpec(seed=3))
        b = generate(TaskSpec(seed=3))
        for left, right in zip(a, b):
            assert np.array_equal(left.observations, right.observations)
            assert np.array_equal(left.labels, right.labels)

    def test_different_seeds_differ(self):
        a = generate(TaskSpec(seed=0))[0]
        b = generate(TaskSpec(seed=1))[0]
        assert not np.array_equal(a.observations, b.observations)

    def test_splits_are_disjoint(self):
        splits = generate(TaskSpec(seed=2))
        rows = set()
        for split in splits:
            for i in range(len(split)):
                rows.add(split.observations[i].tobytes())
        assert len(rows) == sum(len(s) for s in splits)

    def test_noiseless_task_is_linearly_solvable(self):
        # without noise the 12 observation coordinates determine the latent, so
        # a barely regularized linear fit on plenty of data is essentially perfect
        train, _, test = generate(TaskSpec(noise_std=0.0, train_size=2000, seed=0))
        model = LogisticRegression(max_iter=5000, C=1e6)
        model.fit(train.flat_observations(), train.labels.ravel())
        accuracy = model.score(test.flat_observations(), test.labels.ravel()) * 100.0
        assert accuracy >= 99.0

    def test_default_noise_puts_baseline_in_the_target_band(self):
        accs = [centralized_accuracy(TaskSpec(seed=seed)) for seed in range(6)]
        assert 70.0 <= float(np.mean(accs)) <= 80.0

    def test_more_noise_never_helps_the_baseline(self):
        stds = (0.5, 1.25, 2.5)
        means = []
        for std in stds:
            accs = [centralized_accuracy(TaskSpec(noise_std=std, seed=seed)) for seed in range(6)]
            means.append(float(np.mean(accs)))
        assert means[0] >= means[1] >= means[2]

    def test_invalid_spec(self):
        with pytest.raises(ValueError, match="noise_std"):
            generate(TaskSpec(noise_std=-1.0))
        with pytest.raises(ValueError, match="train_size"):
            generate(TaskSpec(train_size=0))


class TestLabelBalance:
    def test_reference_test_split_is_roughly_balanced(self):
        _, _, test = generate(TaskSpec(seed=0))
        assert 0.45 <= label_balance(test) <= 0.55

    def test_all_positive(self):
        data = Dataset(np.zeros((3, 6, 2)), np.ones((3, 1)))
        assert label_balance(data) == 1.0

    def test_empty_set_is_an_error(self):
        empty = Dataset(np.zeros((0, 6, 2)), np.zeros((0, 1)))
        with pytest.raises(ValueError, match="empty"):
            label_balance(empty)


class TestCsvRoundTrip:
    def test_exact_round_trip(self, tmp_path):
        train, _, _ = generate(TaskSpec(seed=4))
        path = tmp_path / "train.csv"
        save_dataset_csv(train, path)
        loaded = load_dataset_csv(path)
        assert np.array_equal(loaded.observations, train.observations)
        assert np.array_equal(loaded.labels, train.labels)

    def test_header_names_sensors(self, tmp_path):
        train, _, _ = generate(TaskSpec(seed=4))
        path = tmp_path / "train.csv"
        save_dataset_csv(train, path)
        header = path.read_text().splitlines()[0].split(",")
        assert header[0] == "s0_0"
        assert header[-2] == "s5_1"
        assert header[-1] == "label"
