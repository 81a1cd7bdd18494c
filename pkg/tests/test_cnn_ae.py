import numpy as np
import pytest

from fuzzy_connectome.cnn_ae import (
    BottleneckGuard,
    FeatureVector,
    bottleneck_collapsed,
    build_autoencoder,
    encode,
    extract_features,
    feature_matrix,
    finetune_classifier,
    format_summary,
    layer_summary,
    load_features_csv,
    load_model,
    save_features_csv,
    save_model,
    to_input_tensor,
    train_reconstruction,
)
from fuzzy_connectome.data_model import ClassLabel
from fuzzy_connectome.errors import ShapeError
from fuzzy_connectome.nn import TrainConfig


def _matrices(n, size, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        a = np.tanh(rng.standard_normal((size, size)))
        a = (a + a.T) / 2
        np.fill_diagonal(a, 1.0)
        out.append(a)
    return out


def test_architecture_at_118():
    model = build_autoencoder(118, seed=0)
    rows = layer_summary(model)
    encoder_rows = rows[:len(model.encoder.layers)]
    assert [r.output_shape for r in encoder_rows if r.layer == "MaxPool2x2"] == [(59, 59, 32), (30, 30, 32), (15, 15, 1)]
    assert rows[-1].output_shape == (118, 118, 1)
    assert [r.params for r in rows if r.params] == [320, 9248, 289, 10, 320, 9248, 289]
    assert model.n_params == 19724
    assert model.bottleneck_size == 15
    assert "19724" in format_summary(model)


def test_small_input_shapes_and_features():
    model = build_autoencoder(16, seed=0)
    mats = _matrices(3, 16)
    assert model.reconstruct(mats).shape == (3, 16, 16)
    assert encode(model, mats).shape == (3, 4)
    assert np.all(np.abs(model.reconstruct(mats)) <= 1.0)


def test_feature_length_at_118():
    model = build_autoencoder(118, seed=0)
    assert encode(model, _matrices(1, 118)).shape == (1, 225)


def test_zero_input_with_zero_biases_gives_zero_features():
    model = build_autoencoder(16, seed=3)
    for layer in model.encoder.layers:
        if "b" in layer.params:
            layer.params["b"][:] = 0.0
    assert np.all(encode(model, [np.zeros((16, 16))]) == 0.0)


def test_wrong_size_and_too_small_input():
    with pytest.raises(ShapeError):
        to_input_tensor([np.zeros((15, 15))], 16)
    with pytest.raises(ValueError):
        build_autoencoder(4)


def test_reconstruction_loss_decreases():
    model = build_autoencoder(16, seed=1)
    mats = _matrices(6, 16)
    x = to_input_tensor(mats, 16)
    before = float(np.mean((model.reconstruct(mats) - x[..., 0]) ** 2))
    _, history = train_reconstruction(model, mats, TrainConfig(learning_rate=1e-2, epochs=15, batch_size=3))
    assert 1 <= len(history) <= 15
    assert float(np.mean((model.reconstruct(mats) - x[..., 0]) ** 2)) <= before
    assert not bottleneck_collapsed(encode(model, mats))


def test_zero_learning_rate_gives_constant_history():
    model = build_autoencoder(16, seed=1)
    _, history = train_reconstruction(model, _matrices(4, 16), TrainConfig(learning_rate=0.0, epochs=3, batch_size=4))
    assert history == pytest.approx([history[0]] * 3)


def test_finetune_is_deterministic_and_leaves_model_untouched():
    model = build_autoencoder(16, seed=2)
    before = model.encoder.layers[0].params["W"].copy()
    mats = _matrices(6, 16, seed=4)
    labels = [0, 1, 2, 0, 1, 2]
    config = TrainConfig(learning_rate=1e-2, epochs=8, batch_size=3, seed=9)
    tuned_a, curve_a = finetune_classifier(model, mats, labels, config)
    tuned_b, curve_b = finetune_classifier(model, mats, labels, config)
    assert curve_a == curve_b
    assert 1 <= len(curve_a) <= 8
    assert all(0.0 <= c <= 1.0 for c in curve_a)
    np.testing.assert_array_equal(tuned_a.predict_proba(mats), tuned_b.predict_proba(mats))
    np.testing.assert_array_equal(model.encoder.layers[0].params["W"], before)
    np.testing.assert_allclose(tuned_a.predict_proba(mats).sum(axis=1), 1.0)


def test_finetune_frozen_encoder_keeps_weights():
    model = build_autoencoder(16, seed=2)
    mats = _matrices(6, 16, seed=4)
    tuned, _ = finetune_classifier(model, mats, [0, 1, 2, 0, 1, 2], TrainConfig(epochs=2, batch_size=6), freeze_encoder=True)
    for a, b in zip(tuned.encoder.layers, model.encoder.layers):
        for name in a.params:
            np.testing.assert_array_equal(a.params[name], b.params[name])


def test_collapsed_bottleneck_detection():
    assert bottleneck_collapsed(np.zeros((5, 4)))
    assert bottleneck_collapsed(np.ones((3, 2, 2, 1)))
    assert not bottleneck_collapsed(np.zeros((1, 4)))
    assert not bottleneck_collapsed(np.array([[0.0, 1.0], [0.0, 1.5]]))


def test_guard_rolls_back_a_dead_bottleneck():
    model = build_autoencoder(16, seed=3)
    mats = _matrices(8, 16, seed=5)
    x = to_input_tensor(mats, 16)
    network = model.network
    guard = BottleneckGuard(network, model.encoder, x)
    assert guard.active
    assert guard(0, 0.0) is False
    live = encode(model, mats)

    # a large negative bias on the one-channel conv silences its ReLU
    model.encoder.layers[6].params["b"][...] = -1e3
    assert bottleneck_collapsed(encode(model, mats))
    assert guard(1, 0.0) is True
    assert guard.rolled_back_at == 1
    np.testing.assert_array_equal(model.encoder.layers[6].params["b"], np.zeros(1))
    np.testing.assert_array_equal(encode(model, mats), live)


def test_finetune_requires_every_class():
    model = build_autoencoder(16)
    with pytest.raises(ValueError, match="ADHD"):
        finetune_classifier(model, _matrices(2, 16), [0, 1], TrainConfig(epochs=1))


def test_model_and_features_persist(tmp_path):
    model = build_autoencoder(16, seed=5)
    mats = _matrices(3, 16)
    loaded = load_model(save_model(model, tmp_path / "ae.fcnn"))
    np.testing.assert_array_equal(encode(loaded, mats), encode(model, mats))

    feats = extract_features(model, mats, labels=[0, 2, 1])
    assert feats[1].label is ClassLabel.ADHD
    back = load_features_csv(save_features_csv(feats, tmp_path / "features.csv"))
    np.testing.assert_array_equal(feature_matrix(back), feature_matrix(feats))
    assert [f.subject_id for f in back] == ["0", "1", "2"]
    assert isinstance(back[0], FeatureVector)
