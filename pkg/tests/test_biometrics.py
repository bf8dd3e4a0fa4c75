import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import subspace_angles

from hbmatch.biometrics.features import (
    MODALITIES,
    build_features,
    make_split,
    split_indices,
    training_subjects,
)
from hbmatch.biometrics.fusion import fuse_face_iris, fuse_rows, fuse_vectors
from hbmatch.biometrics.iris import (
    COLS,
    ROWS,
    IrisCode,
    concat_irises,
    flatten,
    hamming,
    icod_bytes,
    icod_from_bytes,
    rotate_iris,
    rotation_gallery,
)
from hbmatch.biometrics.pca import (
    PcaModel,
    pca_project,
    pca_train,
    pcam_bytes,
    pcam_from_bytes,
    reconstruction_error,
)
from hbmatch.biometrics.synth import SynthConfig, generate_dataset, load_dataset, write_dataset
from hbmatch.errors import BadMagicError, InsufficientDataError, TruncatedDataError, UsageError


def random_code(seed, **kw):
    return IrisCode(np.random.default_rng(seed).integers(0, 2, (ROWS, COLS), dtype=np.uint8), **kw)


# -- iris ----------------------------------------------------------------------


@settings(max_examples=20)
@given(st.integers(-600, 600), st.integers(-600, 600))
def test_rotation_composes(a, b):
    c = random_code(1)
    assert rotate_iris(rotate_iris(c, a), b) == rotate_iris(c, a + b)
    assert rotate_iris(c, COLS) == c


def test_rotation_moves_columns():
    c = random_code(2)
    r = rotate_iris(c, 3)
    assert np.array_equal(r.bits[:, 3], c.bits[:, 0])
    assert np.array_equal(r.bits[:, 2], c.bits[:, COLS - 1])


def test_rotation_gallery_layout():
    left, right = random_code(3), random_code(4, eye="right")
    g = rotation_gallery(left, right)
    assert g.shape == (15, 131072)
    for i, s in enumerate(range(-7, 8)):
        want = concat_irises(flatten(rotate_iris(left, s)), flatten(rotate_iris(right, s)))
        assert np.array_equal(g[i], want)


def test_icod_roundtrip_and_errors():
    c = random_code(5)
    data = icod_bytes(c)
    assert len(data) == 9 + ROWS * COLS // 8
    assert icod_from_bytes(data) == c
    # MSB-first packing
    assert data[9] >> 7 == c.bits[0, 0]
    with pytest.raises(BadMagicError):
        icod_from_bytes(b"XXXX" + data[4:])
    with pytest.raises(TruncatedDataError):
        icod_from_bytes(data[:-1])


def test_iris_validation():
    with pytest.raises(UsageError):
        IrisCode(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(UsageError):
        IrisCode(np.full((ROWS, COLS), 2))
    assert hamming(random_code(1), random_code(1)) == 0


# -- PCA -----------------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 64), st.integers(3, 16), st.integers(0, 10**6), st.data())
def test_snapshot_matches_covariance_eigh(dim, n, seed, data):
    x = np.random.default_rng(seed).standard_normal((n, dim)) * np.linspace(3, 0.5, dim)
    rank = min(n - 1, dim)
    k = data.draw(st.integers(1, rank))
    model = pca_train(x, k, seed=seed)
    xc = x - x.mean(axis=0)
    evals, evecs = np.linalg.eigh(xc.T @ xc)
    direct = evecs[:, np.argsort(evals)[::-1][:k]]
    assert model.k == k
    assert np.max(subspace_angles(model.basis.T, direct)) < 1e-8
    assert np.allclose(model.basis @ model.basis.T, np.eye(k), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(3, 12), st.integers(0, 10**6))
def test_mean_projects_to_zero(dim, n, seed):
    x = np.random.default_rng(seed).standard_normal((n, dim))
    model = pca_train(x, min(n - 1, dim), seed=seed)
    assert np.abs(pca_project(model, x.mean(axis=0))).max() < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 40), st.integers(5, 14), st.integers(0, 10**6))
def test_reconstruction_error_monotone(dim, n, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, dim))
    model = pca_train(x, min(n - 1, dim), seed=seed)
    v = rng.standard_normal(dim)
    errs = [reconstruction_error(model, v, k) for k in range(0, model.k + 1)]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))


def test_rank_cap_recorded():
    x = np.random.default_rng(0).standard_normal((5, 50))
    with pytest.warns(UserWarning):
        model = pca_train(x, 20)
    assert model.k == 4
    assert "capped" in model.warnings[0]


def test_pca_errors():
    with pytest.raises(InsufficientDataError):
        pca_train(np.ones((1, 4)), 1)
    with pytest.raises(InsufficientDataError):
        pca_train(np.ones((3, 4)), 1)
    with pytest.raises(UsageError):
        pca_train(np.ones(4), 1)


def test_sign_convention_and_determinism():
    x = np.random.default_rng(9).standard_normal((10, 30))
    a, b = pca_train(x, 5, seed=1), pca_train(x, 5, seed=1)
    assert a == b
    for row in a.basis:
        assert row[np.argmax(np.abs(row))] > 0


def test_pcam_roundtrip():
    model = pca_train(np.random.default_rng(1).standard_normal((8, 20)), 4, seed=77)
    back = pcam_from_bytes(pcam_bytes(model))
    assert back == model
    assert isinstance(back, PcaModel) and back.seed == 77
    with pytest.raises(TruncatedDataError):
        pcam_from_bytes(pcam_bytes(model)[:-3])


# -- fusion --------------------------------------------------------------------


def test_fusion_layout():
    rng = np.random.default_rng(2)
    face, iris = rng.standard_normal(512), rng.standard_normal(500)
    t = fuse_face_iris(face, iris)
    assert t.vector.shape == (1012,)
    assert np.linalg.norm(t.vector) == pytest.approx(1.0)
    # equal weight for the two parts
    assert np.linalg.norm(t.vector[:512]) == pytest.approx(np.linalg.norm(t.vector[512:]))
    assert np.allclose(fuse_rows(face[None], iris[None])[0], fuse_vectors(face, iris))
    with pytest.raises(UsageError):
        fuse_face_iris(face[:10], iris)


# -- synthetic data and features -----------------------------------------------


SMALL = SynthConfig(n_subjects=6, sessions=3, faces_per_subject=3, seed=4)


def test_synth_deterministic():
    a, b = generate_dataset(SMALL), generate_dataset(SMALL)
    for sid in a.subjects:
        assert np.array_equal(a.faces[sid], b.faces[sid])
        assert all(x[0] == y[0] and x[1] == y[1] for x, y in zip(a.iris[sid], b.iris[sid]))


def test_synth_write_load(tmp_path):
    ds = generate_dataset(SMALL)
    write_dataset(ds, tmp_path)
    back = load_dataset(tmp_path)
    assert back.subjects == ds.subjects
    for sid in ds.subjects:
        assert np.array_equal(back.faces[sid], ds.faces[sid])
        assert back.iris[sid][1][0] == ds.iris[sid][1][0]
    assert back.meta["generator"]["seed"] == 4


def test_synth_config_validation():
    with pytest.raises(UsageError):
        SynthConfig(n_subjects=1)
    with pytest.raises(UsageError):
        SynthConfig(p_flip=0.6)
    with pytest.raises(UsageError):
        SynthConfig(face_goat_fraction=0.7, iris_goat_fraction=0.7)


def test_goats_are_exclusive():
    ds = generate_dataset(SynthConfig(n_subjects=20, face_goat_fraction=0.25, iris_goat_fraction=0.25))
    assert len(ds.meta["face_goats"]) == 5 and len(ds.meta["iris_goats"]) == 5
    assert not set(ds.meta["face_goats"]) & set(ds.meta["iris_goats"])


@given(st.integers(1, 30), st.integers(0, 100))
def test_split_partition(n, seed):
    g, p = split_indices(n, seed, "s0001", "face")
    assert sorted(g + p) == list(range(n))
    if n >= 2:
        assert len(p) == max(1, int(np.floor(0.3 * n + 0.5)))
    assert split_indices(n, seed, "s0001", "face") == (g, p)


def test_training_subjects_half():
    subs = [f"s{i}" for i in range(10)]
    assert len(training_subjects(subs, 0)) == 5
    assert training_subjects(subs, 3) == training_subjects(list(reversed(subs)), 3)


def test_feature_dimensions_and_counts():
    ds = generate_dataset(SMALL)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        feats = {m: build_features(ds, m, seed=0) for m in MODALITIES}
    assert feats["face-only"].dim == 512
    split = make_split(ds, 0)
    for sid in ds.subjects:
        n_gal_sessions = len(split.iris[sid][0])
        assert len(feats["single-iris"].gallery[sid][1]) == 15 * n_gal_sessions
        n_gal_faces = len(split.faces[sid][0])
        assert len(feats["full-fusion"].gallery[sid][1]) == 15 * n_gal_sessions * n_gal_faces
        rots = sorted({e.rotation for e in feats["dual-iris-fusion"].gallery[sid][1]})
        assert rots == list(range(-7, 8))
    assert feats["full-fusion"].dim == 512 + feats["dual-iris-fusion"].dim
    for f in feats.values():
        for vecs, _ in f.gallery.values():
            assert np.allclose(np.linalg.norm(vecs, axis=1), 1.0)
