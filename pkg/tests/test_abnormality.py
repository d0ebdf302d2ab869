"""Abnormality module: frozen backbone, distortion sets, scorer training."""

import numpy as np
import pytest

from softdetect import nn
from softdetect.abnormality import (
    DEFAULT_IMAGE_DISTORTIONS,
    AbnormalityModule,
    DistortionRange,
    build_module,
    load_module,
    make_abnormal_set,
    normality_score,
    save_module,
    scorer_features,
    train_scorer,
)
from softdetect.data import UniformNoise, distort, gen_synthetic_digits
from softdetect.metrics import auroc, rank_sum_test
from softdetect.nn import TrainConfig, train_classifier


@pytest.fixture(scope="module")
def trained_backbone():
    train = gen_synthetic_digits(2000, seed=400)
    cfg = TrainConfig(
        epochs=3,
        seed=401,
        batch_size=64,
        hidden_widths=(128, 128),
        loss_weights={"classification": 1.0, "reconstruction": 1.0},
    )
    mlp, _ = train_classifier(cfg, train)
    return mlp, train


@pytest.fixture(scope="module")
def fitted_module(trained_backbone):
    mlp, train = trained_backbone
    module = build_module(mlp, seed=402)
    abnormal = make_abnormal_set(train.subset(range(800)), seed=403)
    train_scorer(module, abnormal, seed=404)
    return module


class TestDistortionRange:
    def test_rejects_unknown_family(self):
        with pytest.raises(ValueError):
            DistortionRange("sharpen", 0.1, 0.5)

    def test_rejects_zero_or_inverted_strengths(self):
        with pytest.raises(ValueError):
            DistortionRange("blur", 0.0, 1.0)
        with pytest.raises(ValueError):
            DistortionRange("blur", 2.0, 1.0)

    def test_sample_within_bounds(self):
        rng = np.random.default_rng(1)
        fam = DistortionRange("blur", 0.5, 2.0)
        for _ in range(100):
            kind = fam.sample(rng)
            assert 0.5 <= kind.sigma_px <= 2.0

    def test_rotation_random_sign(self):
        rng = np.random.default_rng(2)
        fam = DistortionRange("rotation", 15.0, 60.0, random_sign=True)
        signs = {np.sign(fam.sample(rng).degrees) for _ in range(50)}
        assert signs == {-1.0, 1.0}

    def test_default_families(self):
        kinds = {f.kind for f in DEFAULT_IMAGE_DISTORTIONS}
        assert kinds == {"blur", "rotation", "gaussian-noise"}


class TestBuildModule:
    def test_needs_decoder(self):
        plain = nn.build_mlp(16, (8,), 4, decoder=False, seed=1)
        with pytest.raises(ValueError):
            build_module(plain)

    def test_feature_dim_and_head(self, trained_backbone):
        mlp, _ = trained_backbone
        module = build_module(mlp, seed=5)
        assert module.feature_dim == 784 + 10
        assert module.scorer[0].activation == "gelu"
        assert module.scorer[-1].activation == "sigmoid"
        assert module.scorer[-1].weights.shape[0] == 1

    def test_features_are_residual_and_probs(self, trained_backbone):
        mlp, train = trained_backbone
        module = build_module(mlp, seed=6)
        x = train.inputs[:5]
        feats = scorer_features(module, x)
        probs, recon = nn.predict(mlp, x)
        np.testing.assert_array_equal(feats[:, :784], (x - recon) ** 2)
        np.testing.assert_array_equal(feats[:, 784:], probs)


class TestMakeAbnormalSet:
    def test_balanced_and_ordered(self, trained_backbone):
        _, train = trained_backbone
        clean = train.subset(range(100))
        pairs = make_abnormal_set(clean, seed=7)
        assert len(pairs) == 200
        np.testing.assert_array_equal(pairs.labels[:100], 1)
        np.testing.assert_array_equal(pairs.labels[100:], 0)
        np.testing.assert_array_equal(pairs.inputs[:100], clean.inputs)
        assert pairs.class_count == 2

    def test_distorted_half_differs(self, trained_backbone):
        _, train = trained_backbone
        clean = train.subset(range(50))
        pairs = make_abnormal_set(clean, seed=8)
        changed = np.any(pairs.inputs[50:] != clean.inputs, axis=1)
        assert changed.all()

    def test_metadata_lists_applied_kinds(self, trained_backbone):
        _, train = trained_backbone
        pairs = make_abnormal_set(train.subset(range(30)), seed=9)
        applied = pairs.metadata["applied_distortions"]
        assert len(applied) == 30
        assert set(applied) <= {"Blur", "Rotation", "GaussianNoise", "UniformNoise"}

    def test_determinism(self, trained_backbone):
        _, train = trained_backbone
        clean = train.subset(range(20))
        a = make_abnormal_set(clean, seed=10)
        b = make_abnormal_set(clean, seed=10)
        np.testing.assert_array_equal(a.inputs, b.inputs)
        assert not np.array_equal(
            a.inputs, make_abnormal_set(clean, seed=11).inputs
        )

    def test_rejects_empty(self, trained_backbone):
        _, train = trained_backbone
        with pytest.raises(ValueError):
            make_abnormal_set(train.subset(np.array([], dtype=np.int64)), seed=1)

    def test_rejects_no_distortions(self, trained_backbone):
        _, train = trained_backbone
        with pytest.raises(ValueError):
            make_abnormal_set(train.subset(range(5)), distortions=(), seed=1)


class TestTrainScorer:
    def test_backbone_frozen_scorer_updated(self, trained_backbone):
        mlp, train = trained_backbone
        module = build_module(mlp, seed=20)
        before_backbone = nn.param_checksum(nn.parameters(mlp))
        before_scorer = {
            k: v.copy() for k, v in
            {"w": module.scorer[0].weights, "b": module.scorer[-1].bias}.items()
        }
        abnormal = make_abnormal_set(train.subset(range(200)), seed=21)
        train_scorer(module, abnormal, seed=22)
        assert nn.param_checksum(nn.parameters(mlp)) == before_backbone
        assert module.backbone_checksum == before_backbone
        assert not np.array_equal(module.scorer[0].weights, before_scorer["w"])

    def test_loss_decreases(self, trained_backbone):
        mlp, train = trained_backbone
        module = build_module(mlp, seed=23)
        abnormal = make_abnormal_set(train.subset(range(400)), seed=24)
        _, log = train_scorer(module, abnormal, epochs=3, seed=25)
        assert log[-1]["bce"] < log[0]["bce"]

    def test_tampered_backbone_rejected(self, trained_backbone):
        mlp, train = trained_backbone
        module = build_module(mlp, seed=26)
        module.backbone.classifier.bias[0] += 1e-6
        abnormal = make_abnormal_set(train.subset(range(10)), seed=27)
        with pytest.raises(AssertionError):
            train_scorer(module, abnormal, seed=28)
        module.backbone.classifier.bias[0] -= 1e-6

    def test_rejects_non_binary_labels(self, trained_backbone):
        mlp, train = trained_backbone
        module = build_module(mlp, seed=29)
        with pytest.raises(ValueError):
            train_scorer(module, train.subset(range(10)), seed=30)


class TestNormalityScore:
    def test_range_and_shapes(self, fitted_module, trained_backbone):
        _, train = trained_backbone
        batch = normality_score(fitted_module, train.inputs[:10])
        assert batch.shape == (10,)
        assert np.all((batch > 0) & (batch < 1))
        single = normality_score(fitted_module, train.inputs[0])
        assert isinstance(single, float)
        # batch-1 and batch-10 matmuls may differ in the last ulp
        assert abs(single - batch[0]) < 1e-12

    def test_determinism(self, fitted_module, trained_backbone):
        _, train = trained_backbone
        a = normality_score(fitted_module, train.inputs[:20])
        b = normality_score(fitted_module, train.inputs[:20])
        np.testing.assert_array_equal(a, b)

    def test_separates_clean_from_trained_distortions(
        self, fitted_module, trained_backbone
    ):
        _, train = trained_backbone
        holdout = train.subset(range(1200, 1600))
        pairs = make_abnormal_set(holdout, seed=50)
        scores = normality_score(fitted_module, pairs.inputs)
        clean, dirty = scores[:400], scores[400:]
        assert auroc(clean, dirty) > 0.5
        res = rank_sum_test(clean, dirty)
        assert res.p < 0.01

    def test_generalizes_to_unseen_noise_family(
        self, fitted_module, trained_backbone
    ):
        # uniform pixel noise is not one of the scorer's training
        # distortion families
        _, train = trained_backbone
        holdout = train.inputs[1600:1900]
        rng = np.random.default_rng(51)
        dirty = np.vstack([
            distort(row, UniformNoise(amplitude=0.5),
                    seed=int(rng.integers(2**63)))
            for row in holdout
        ])
        s_clean = normality_score(fitted_module, holdout)
        s_dirty = normality_score(fitted_module, dirty)
        assert auroc(s_clean, s_dirty) > 0.5
        assert rank_sum_test(s_clean, s_dirty).p < 0.01


class TestModuleCheckpoint:
    def test_roundtrip_scores_bit_exact(self, fitted_module, trained_backbone, tmp_path):
        _, train = trained_backbone
        path = tmp_path / "module.json"
        save_module(fitted_module, path)
        back = load_module(path)
        x = train.inputs[:25]
        np.testing.assert_array_equal(
            normality_score(fitted_module, x), normality_score(back, x)
        )
        assert back.input_recipe == fitted_module.input_recipe
        assert back.backbone_checksum == fitted_module.backbone_checksum

    def test_format_tag_checked(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": 0, "kind": "abnormality"}')
        with pytest.raises(ValueError):
            load_module(path)
