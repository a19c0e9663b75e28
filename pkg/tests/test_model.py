import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hierdag import InvalidConfig, LabelNotInHierarchy, ParseError, ShapeMismatch, build
from hierdag.data import Dataset, sample_hierarchical
from hierdag.encoding import TargetTable
from hierdag.errors import EmptyDataset
from hierdag.loss import hierarchical_loss_batch, onehot_loss_batch
from hierdag.metrics import metrics_to_csv
from hierdag.model import EPS, MLP, SGD, Adam, Classifier, TrainConfig, checkpoint_steps, train_epochs

from conftest import TOY2_EDGES, TOY2_LABELED, TOY2_NODES, finite_difference_worst


def linear(w, b):
    return MLP([np.atleast_2d(np.asarray(w, dtype=float))], [np.atleast_1d(np.asarray(b, dtype=float))])


def test_zero_linear_outputs_half():
    net = MLP([np.zeros((4, 3))], [np.zeros(3)])
    np.testing.assert_array_equal(net.forward(np.arange(4.0)), np.full(3, 0.5))


def test_single_unit():
    assert linear([[1.0]], [0.0]).forward([0.0])[0] == 0.5


def test_saturation_clamps():
    net = linear([[1e4]], [0.0])
    assert net.forward([1.0])[0] == 1.0 - EPS
    assert net.forward([-1.0])[0] == EPS
    # clamped outputs pass no gradient
    grads = net.backward(np.array([1.0]), np.array([1.0]))
    assert not any(g.any() for g in grads)


def test_shape_errors():
    net = MLP.init(3, (4,), 2, 0)
    with pytest.raises(ShapeMismatch):
        net.forward(np.zeros(5))
    with pytest.raises(ShapeMismatch):
        net.backward(np.zeros(3), np.zeros(3))
    with pytest.raises(ShapeMismatch):
        MLP([np.zeros((3, 4)), np.zeros((5, 2))], [np.zeros(4), np.zeros(2)])


def test_zero_grad_out():
    net = MLP.init(3, (4,), 2, 0)
    grads = net.backward(np.ones((5, 3)), np.zeros((5, 2)))
    assert [g.shape for g in grads] == [p.shape for p in net.params()]
    assert not any(g.any() for g in grads)


def test_glorot_bounds_and_seed():
    a = MLP.init(30, (20,), 10, 5)
    b = MLP.init(30, (20,), 10, 5)
    for wa, wb in zip(a.weights, b.weights):
        np.testing.assert_array_equal(wa, wb)
        limit = np.sqrt(6.0 / sum(wa.shape))
        assert np.abs(wa).max() <= limit
    assert not any(bias.any() for bias in a.biases)


def test_sgd_step():
    p = np.array([1.0])
    SGD(0.1).step([p], [np.array([2.0])])
    assert p[0] == pytest.approx(0.8, abs=1e-15)


def test_adam_first_step():
    p = np.zeros(4)
    opt = Adam(0.001)
    opt.step([p], [np.ones(4)])
    # bias-corrected moments are both 1 after one step
    np.testing.assert_allclose(p, -0.001 / (1.0 + 1e-8), rtol=1e-12)


def test_zero_gradient_steps():
    p = np.array([1.5, -2.0])
    SGD(0.1).step([p], [np.zeros(2)])
    np.testing.assert_array_equal(p, [1.5, -2.0])
    opt = Adam()
    opt.step([p], [np.array([1.0, 1.0])])
    moved = p.copy()
    m_before = opt.m[0].copy()
    opt.step([p], [np.zeros(2)])
    np.testing.assert_array_equal(opt.m[0], 0.9 * m_before)
    assert opt.t == 2
    assert np.all(np.abs(p - moved) > 0)  # momentum still moves parameters


def test_optimizer_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        SGD().step([np.zeros(2)], [np.zeros(3)])
    with pytest.raises(ShapeMismatch):
        Adam().step([np.zeros(2)], [np.zeros(3)])


@pytest.mark.parametrize("hidden", [(), (6,)])
@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_backward_matches_finite_differences(hidden, seed):
    toy2 = build(TOY2_NODES, TOY2_EDGES, TOY2_LABELED)
    rng = np.random.default_rng(seed)
    table = TargetTable.for_hierarchy(toy2)
    x = rng.standard_normal((4, 3))
    labels = rng.choice(table.classes, 4)
    rows = table.rows(labels)
    for head, width in (("hierarchical", len(toy2)), ("baseline", len(table.classes))):
        net = MLP.init(3, hidden, width, rng)
        for b in net.biases:
            b[:] = rng.normal(0, 0.5, b.shape)
        if head == "hierarchical":
            obj = lambda out: hierarchical_loss_batch(table.encodings[rows], table.masks[rows], out)
        else:
            obj = lambda out: onehot_loss_batch(rows, out)
        assert finite_difference_worst(net, x, obj) < 1e-5


def test_masked_components_get_no_gradient(toy1):
    table = TargetTable.for_hierarchy(toy1)
    net = MLP.init(5, (), len(toy1), 0)
    x = np.random.default_rng(0).standard_normal((1, 5))
    y = toy1.index("car")
    rows = table.rows([y])
    _, grad_out = hierarchical_loss_batch(table.encodings[rows], table.masks[rows], net.forward(x))
    dW, db = net.backward(x, grad_out)
    off = table.masks[rows[0]] == 0
    assert not dW[:, off].any() and not db[off].any()


@pytest.fixture
def toy1_data(toy1):
    rng = np.random.default_rng(11)
    return sample_hierarchical(toy1, 100, 8, sigma0=3.0, sigma_obs=0.3, rng=rng)


@pytest.mark.parametrize("head", ["hierarchical", "baseline"])
def test_training_reaches_high_accuracy(toy1, toy1_data, head):
    cfg = TrainConfig(steps=2000, batch_size=64, eval_interval=500)
    model, runs = train_epochs(cfg, toy1_data, toy1, head, seed=3)
    assert runs[0].steps == [500, 1000, 1500, 2000]
    assert runs[0].checkpoints[-1].train_accuracy >= 0.95
    assert model.accuracy(toy1_data, "mlnp") == runs[0].checkpoints[-1].train_accuracy


def test_training_is_deterministic(toy1, toy1_data):
    cfg = TrainConfig(steps=300, eval_interval=50, modes=("mlnp", "anp"))
    a = metrics_to_csv(train_epochs(cfg, toy1_data, toy1, "hierarchical", 4, toy1_data)[1])
    b = metrics_to_csv(train_epochs(cfg, toy1_data, toy1, "hierarchical", 4, toy1_data)[1])
    c = metrics_to_csv(train_epochs(cfg, toy1_data, toy1, "hierarchical", 5, toy1_data)[1])
    assert a == b
    assert a != c


def test_training_errors(toy1, toy1_data):
    cfg = TrainConfig(steps=10, eval_interval=5)
    empty = Dataset(np.zeros((0, 8)), np.zeros(0, dtype=np.int64))
    with pytest.raises(EmptyDataset):
        train_epochs(cfg, empty, toy1)
    bad = Dataset(toy1_data.features, np.full(len(toy1_data), toy1.index("dog")))
    with pytest.raises(LabelNotInHierarchy):
        train_epochs(cfg, bad, toy1)
    with pytest.raises(InvalidConfig):
        train_epochs(TrainConfig(optimizer="rmsprop"), toy1_data, toy1)
    with pytest.raises(InvalidConfig):
        train_epochs(cfg, toy1_data, toy1, head="softmax")


def test_checkpoint_grid():
    assert checkpoint_steps(10, 5) == [5, 10]
    assert checkpoint_steps(12, 5) == [5, 10, 12]
    assert checkpoint_steps(3, 5) == [3]


def test_model_file_round_trip(toy1, toy1_data, tmp_path):
    for head in ("hierarchical", "baseline"):
        model, _ = train_epochs(TrainConfig(steps=50, eval_interval=25, hidden=(5,)), toy1_data, toy1, head, 1)
        path = tmp_path / f"{head}.json"
        model.save(path)
        again = Classifier.load(path)
        assert again.head == head and again.hierarchy == toy1
        np.testing.assert_array_equal(again.outputs(toy1_data.features), model.outputs(toy1_data.features))
        for w1, w2 in zip(again.net.params(), model.net.params()):
            np.testing.assert_array_equal(w1, w2)
        again.save(tmp_path / "again.json")
        assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_model_file_checksum(toy1, toy1_data, tmp_path):
    model, _ = train_epochs(TrainConfig(steps=10, eval_interval=10), toy1_data, toy1, "hierarchical", 1)
    path = tmp_path / "m.json"
    model.save(path)
    doc = json.loads(path.read_text())
    doc["payload"]["biases"][0][0] += 1.0
    path.write_text(json.dumps(doc))
    with pytest.raises(ParseError):
        Classifier.load(path)
    path.write_text("{not json")
    with pytest.raises(ParseError):
        Classifier.load(path)


def test_baseline_predicts_labeled_classes(toy1, toy1_data):
    model, _ = train_epochs(TrainConfig(steps=20, eval_interval=10), toy1_data, toy1, "baseline", 0)
    pred = model.predict(toy1_data.features)
    assert set(pred.tolist()) <= set(toy1.labeled)
    single, score = model.predict_with_scores(toy1_data.features[0])
    assert single == pred[0] and 0 < score < 1
