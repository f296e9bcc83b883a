import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from segconv import ContractError, transpose_conv_naive
from segconv.estimators import SegregatedTransposeConv2d, TransposeConvNetClassifier
from segconv.netdemo import synthetic_digits


def test_transformer_matches_naive(rng):
    k = rng.integers(-4, 5, size=(3, 3, 2, 4)).astype(np.float32)
    X = rng.integers(-4, 5, size=(3, 6, 5, 2)).astype(np.float32)
    for variant in ("fused", "fused_parallel", "naive"):
        out = SegregatedTransposeConv2d(kernel=k, padding=1, variant=variant, workers=2).fit_transform(X)
        assert out.shape == (3, 11, 9, 4)
        for n in range(3):
            np.testing.assert_array_equal(out[n], transpose_conv_naive(X[n], k, 1))


def test_transformer_params_and_clone():
    est = SegregatedTransposeConv2d(kernel=np.ones((2, 2)), padding=3)
    assert est.get_params()["padding"] == 3
    twin = clone(est).set_params(padding=0)
    assert twin.padding == 0 and est.padding == 3


def test_transformer_single_channel_batch_and_pipeline():
    X = np.ones((2, 3, 3))
    pipe = make_pipeline(SegregatedTransposeConv2d(kernel=np.ones((1, 1))))
    out = pipe.fit_transform(X)
    assert out.shape == (2, 5, 5, 1) and out.sum() == 2 * 9


def test_transformer_errors():
    with pytest.raises(NotFittedError):
        SegregatedTransposeConv2d(kernel=np.ones((3, 3))).transform(np.ones((1, 4, 4, 1)))
    with pytest.raises(ContractError):
        SegregatedTransposeConv2d().fit()
    with pytest.raises(ContractError):
        SegregatedTransposeConv2d(kernel=np.ones((3, 3)), variant="gpu").fit()
    with pytest.raises(ContractError):
        SegregatedTransposeConv2d(kernel=np.ones((3, 3)), padding=-1).fit()
    est = SegregatedTransposeConv2d(kernel=np.ones((3, 3, 2, 1))).fit()
    with pytest.raises(ContractError):
        est.transform(np.ones((1, 4, 4, 3)))


def test_classifier_learns_and_predicts_original_labels():
    images, labels = synthetic_digits(120, seed=0, n_classes=3)
    names = np.array(["a", "b", "c"])[labels]
    clf = TransposeConvNetClassifier(iterations=300, seed=1).fit(images, names)
    assert list(clf.classes_) == ["a", "b", "c"]
    proba = clf.predict_proba(images[:10])
    assert proba.shape == (10, 3)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, rtol=1e-5)
    assert set(clf.predict(images)) <= set(names)
    assert clf.score(images, names) > 0.6
    assert clf.report_.final_loss < clf.report_.initial_loss


def test_classifier_validation():
    images, labels = synthetic_digits(4, seed=0)
    clf = TransposeConvNetClassifier(iterations=1)
    with pytest.raises(NotFittedError):
        clf.predict(images)
    with pytest.raises(ContractError):
        clf.fit(images[:, :20, :20], labels)
    with pytest.raises(ContractError):
        clf.fit(images, labels[:3])
    with pytest.raises(ContractError):
        clf.fit(np.zeros((11, 28, 28, 1)), np.arange(11))
