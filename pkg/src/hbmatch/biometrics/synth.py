"""Synthetic identities with iris codes and face embeddings, plus dataset I/O.

Iris model: every subject/eye has a latent real field built from a shared
population basis of smooth banded fields (per-subject coefficients) plus an
idiosyncratic smooth field.  Thresholding at zero gives the latent code.  A
session sample is the latent code circularly shifted by a random number of
columns with i.i.d. bit flips.

Face model: a latent unit vector per subject; a sample is latent + Gaussian
noise, renormalized.

"Goat" subjects are degraded in one modality: their samples are drawn from
a partially re-randomized latent, so their genuine scores fall among the
impostors for that modality only.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from ..codec import read_fvec, write_fvec
from ..errors import UsageError
from .iris import COLS, ROWS, IrisCode, read_icod, write_icod

FACE_DIM = 512
MANIFEST_NAME = "manifest.json"
FIELD_SIGMA = (2.0, 6.0)  # rows, columns


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 20
    sessions: int = 2
    faces_per_subject: int = 3
    p_flip: float = 0.1
    sigma_face: float = 0.3
    max_shift: int = 7
    n_basis: int = 16
    idio_weight: float = 0.5
    face_goat_fraction: float = 0.0
    iris_goat_fraction: float = 0.0
    goat_face_sigma: float = 3.0
    goat_iris_rho: float = 0.3
    exclusive_goats: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_subjects < 2:
            raise UsageError("need at least two subjects")
        if self.sessions < 1 or self.faces_per_subject < 1:
            raise UsageError("sessions and faces per subject must be positive")
        if not 0.0 <= self.p_flip < 0.5:
            raise UsageError("p_flip must lie in [0, 0.5)")
        if self.sigma_face < 0 or self.goat_face_sigma < 0:
            raise UsageError("face noise must be non-negative")
        if not 0 <= self.max_shift <= COLS // 2:
            raise UsageError("max_shift out of range")
        if self.n_basis < 1 or self.idio_weight < 0:
            raise UsageError("invalid iris field parameters")
        for frac in (self.face_goat_fraction, self.iris_goat_fraction):
            if not 0.0 <= frac <= 1.0:
                raise UsageError("goat fractions must lie in [0, 1]")
        if self.exclusive_goats and self.face_goat_fraction + self.iris_goat_fraction > 1.0:
            raise UsageError("exclusive goat fractions exceed 1")
        if not 0.0 <= self.goat_iris_rho <= 1.0:
            raise UsageError("goat_iris_rho must lie in [0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class Dataset:
    subjects: list
    faces: dict  # subject -> (n_faces, 512) float64
    iris: dict  # subject -> list of (left IrisCode, right IrisCode) per session
    meta: dict

    def face_count(self, sid) -> int:
        return len(self.faces.get(sid, ()))

    def session_count(self, sid) -> int:
        return len(self.iris.get(sid, ()))


def _smooth_field(rng) -> np.ndarray:
    w = rng.standard_normal((ROWS, COLS))
    f = gaussian_filter(w, sigma=FIELD_SIGMA, mode=("nearest", "wrap"))
    return (f - f.mean()) / f.std()


def _population(cfg: SynthConfig, rng) -> dict:
    return {eye: np.stack([_smooth_field(rng) for _ in range(cfg.n_basis)]) for eye in ("left", "right")}


def _field(basis, coef, idio, cfg) -> np.ndarray:
    pop = np.tensordot(coef, basis, axes=1) / np.sqrt(cfg.n_basis)
    return pop + cfg.idio_weight * idio


def _iris_sample(latent_bits, cfg, rng, shift=None) -> np.ndarray:
    if shift is None:
        shift = int(rng.integers(-cfg.max_shift, cfg.max_shift + 1)) if cfg.max_shift else 0
    bits = np.roll(latent_bits, shift, axis=1)
    if cfg.p_flip > 0:
        flips = rng.random(bits.shape) < cfg.p_flip
        bits = bits ^ flips.astype(np.uint8)
    return bits


def _pick_goats(cfg: SynthConfig, rng) -> tuple[set, set]:
    n = cfg.n_subjects
    nf = int(round(cfg.face_goat_fraction * n))
    ni = int(round(cfg.iris_goat_fraction * n))
    order = rng.permutation(n)
    if cfg.exclusive_goats:
        return set(order[:nf].tolist()), set(order[nf : nf + ni].tolist())
    return set(order[:nf].tolist()), set(rng.permutation(n)[:ni].tolist())


def subject_id(i: int) -> str:
    return f"s{i:04d}"


def generate_dataset(cfg: SynthConfig) -> Dataset:
    """In-memory dataset; a pure function of ``cfg``."""
    root = np.random.SeedSequence(cfg.seed)
    pop_seq, goat_seq, subj_seq = root.spawn(3)
    basis = _population(cfg, np.random.default_rng(pop_seq))
    face_goats, iris_goats = _pick_goats(cfg, np.random.default_rng(goat_seq))

    subjects, faces, iris = [], {}, {}
    for i, seq in enumerate(subj_seq.spawn(cfg.n_subjects)):
        rng = np.random.default_rng(seq)
        sid = subject_id(i)
        subjects.append(sid)

        latent = rng.standard_normal(FACE_DIM)
        latent /= np.linalg.norm(latent)
        sigma = cfg.goat_face_sigma if i in face_goats else cfg.sigma_face
        fs = latent + sigma * rng.standard_normal((cfg.faces_per_subject, FACE_DIM)) / np.sqrt(FACE_DIM)
        faces[sid] = fs / np.linalg.norm(fs, axis=1, keepdims=True)

        eyes = {}
        for eye in ("left", "right"):
            coef = rng.standard_normal(cfg.n_basis)
            idio = _smooth_field(rng)
            eyes[eye] = (coef, idio, (_field(basis[eye], coef, idio, cfg) > 0).astype(np.uint8))
        sessions = []
        for s in range(cfg.sessions):
            shift = int(rng.integers(-cfg.max_shift, cfg.max_shift + 1)) if cfg.max_shift else 0
            pair = []
            for eye in ("left", "right"):
                coef, idio, bits = eyes[eye]
                if i in iris_goats:
                    rho = cfg.goat_iris_rho
                    c = rho * coef + np.sqrt(1 - rho**2) * rng.standard_normal(cfg.n_basis)
                    d = rho * idio + np.sqrt(1 - rho**2) * _smooth_field(rng)
                    bits = (_field(basis[eye], c, d, cfg) > 0).astype(np.uint8)
                code = _iris_sample(bits, cfg, rng, shift)
                pair.append(IrisCode(code, sid, eye, s))
            sessions.append(tuple(pair))
        iris[sid] = sessions

    meta = {
        "generator": asdict(cfg),
        "face_goats": sorted(subject_id(i) for i in face_goats),
        "iris_goats": sorted(subject_id(i) for i in iris_goats),
    }
    return Dataset(subjects, faces, iris, meta)


def write_dataset(ds: Dataset, out_dir) -> Path:
    out = Path(out_dir)
    (out / "faces").mkdir(parents=True, exist_ok=True)
    (out / "iris").mkdir(parents=True, exist_ok=True)
    entries = []
    for sid in ds.subjects:
        face_items = []
        for k, f in enumerate(ds.faces.get(sid, ())):
            rel = f"faces/{sid}_f{k}.fvec"
            write_fvec(out / rel, f)
            face_items.append({"index": k, "path": rel, "modality": "face"})
        iris_items = []
        for s, (left, right) in enumerate(ds.iris.get(sid, ())):
            item = {"session": s, "modality": "iris"}
            for eye, code in (("left", left), ("right", right)):
                rel = f"iris/{sid}_s{s}_{eye}.icod"
                write_icod(out / rel, code)
                item[eye] = rel
            iris_items.append(item)
        entries.append({"id": sid, "faces": face_items, "iris": iris_items})
    manifest = {"format": "hbmatch-dataset", "version": 1, **ds.meta, "subjects": entries}
    path = out / MANIFEST_NAME
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(manifest, indent=1))
    os.replace(tmp, path)
    return path


def load_dataset(path) -> Dataset:
    """Load from a dataset directory or its manifest file."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    manifest = json.loads(path.read_text())
    root = path.parent
    subjects, faces, iris = [], {}, {}
    for entry in manifest["subjects"]:
        sid = entry["id"]
        subjects.append(sid)
        fl = [read_fvec(root / it["path"]) for it in sorted(entry.get("faces", []), key=lambda x: x["index"])]
        if fl:
            faces[sid] = np.stack(fl)
        sessions = []
        for it in sorted(entry.get("iris", []), key=lambda x: x["session"]):
            left = read_icod(root / it["left"], subject_id=sid, eye="left", session=it["session"])
            right = read_icod(root / it["right"], subject_id=sid, eye="right", session=it["session"])
            sessions.append((left, right))
        if sessions:
            iris[sid] = sessions
    meta = {k: v for k, v in manifest.items() if k not in ("subjects", "format", "version")}
    return Dataset(subjects, faces, iris, meta)


def synth_generate(cfg: SynthConfig, out_dir=None) -> Dataset:
    """Generate and, when ``out_dir`` is given, write FVEC/ICOD files and a manifest."""
    ds = generate_dataset(cfg)
    if out_dir is not None:
        write_dataset(ds, out_dir)
    return ds
