"""Dataset-level scoring and per-modality evaluation reports."""

from __future__ import annotations

import logging
import platform
import time

import numpy as np

from ..biometrics.features import INPUT_DIMS, MODALITIES, NOMINAL_DIMS, ModalityFeatures, build_features
from ..biometrics.synth import Dataset
from ..codec import DEFAULT_SCALE, EncodingProfile, pack_template, quantize
from ..errors import UsageError
from ..matcher import (
    MatchMode,
    decrypt_raw,
    plain_raw_matrix,
    scores_from_raw,
    select_best,
    server_evaluate,
)
from ..rlwe.keyset import KeySet, generate_keyset
from ..rlwe.params import FheParams, production_params
from ..rlwe.sampling import make_rng
from ..rlwe.scheme import encrypt
from . import reference
from .metrics import ScoreSet, roc_report
from .report import write_report

log = logging.getLogger(__name__)

MODES = ("euclid", "innerprod", "plain")
REPORT_SCHEMA = "hbmatch-eval-report/1"


def quantize_rows(rows: np.ndarray, profile: EncodingProfile) -> np.ndarray:
    return np.stack([quantize(r, profile).values for r in rows]) if len(rows) else np.zeros((0, profile.dim), np.int64)


def _encrypt_rows(qrows, profile, params, pk, rng) -> list:
    from ..codec import QuantizedTemplate

    return [
        encrypt(pk, pack_template(QuantizedTemplate(r, profile), params), rng)
        for r in qrows
    ]


def build_scores(features: ModalityFeatures, mode, params: FheParams, keys: KeySet | None = None,
                 scale: int = DEFAULT_SCALE, seed: int = 0) -> tuple[ScoreSet, dict]:
    """Genuine and impostor aggregate scores for every probe against every subject.

    Returns the ScoreSet and a dict with timing and comparison counts.
    """
    mode = MatchMode(mode)
    profile = EncodingProfile.for_params(params, features.dim, scale)
    subjects = sorted(features.gallery)
    gq = {s: quantize_rows(features.gallery[s][0], profile) for s in subjects}
    pq = {s: quantize_rows(features.probes[s][0], profile) for s in subjects}
    meta = {
        s: ([e.rotation for e in features.gallery[s][1]], [e.order for e in features.gallery[s][1]])
        for s in subjects
    }

    info = {"comparisons": 0, "encrypt_s": 0.0, "compute_s": 0.0, "decrypt_s": 0.0}
    raw_rows = {}  # (probe subject, probe index, gallery subject) -> raw ints
    start = time.perf_counter()
    if mode is MatchMode.PLAIN:
        for ps in subjects:
            for gs in subjects:
                mat = plain_raw_matrix(pq[ps], gq[gs], MatchMode.EUCLID)
                for i, row in enumerate(mat):
                    raw_rows[(ps, i, gs)] = row.tolist()
                info["comparisons"] += mat.size
        info["compute_s"] = time.perf_counter() - start
    else:
        if keys is None or keys.sk is None:
            raise UsageError("encrypted scoring needs a key set with the secret key")
        rng = make_rng(seed)
        t0 = time.perf_counter()
        gct = {s: _encrypt_rows(gq[s], profile, params, keys.pk, rng) for s in subjects}
        pct = {s: _encrypt_rows(pq[s], profile, params, keys.pk, rng) for s in subjects}
        info["encrypt_s"] = time.perf_counter() - t0
        for ps in subjects:
            for i, probe in enumerate(pct[ps]):
                for gs in subjects:
                    row = []
                    for g in gct[gs]:
                        t1 = time.perf_counter()
                        res = server_evaluate(mode, probe, g, keys.rk, keys.gks)
                        t2 = time.perf_counter()
                        row.append(decrypt_raw(mode, res, keys.sk, profile))
                        info["compute_s"] += t2 - t1
                        info["decrypt_s"] += time.perf_counter() - t2
                    raw_rows[(ps, i, gs)] = row
                    info["comparisons"] += len(row)
    info["total_s"] = time.perf_counter() - start

    agg_mode = MatchMode.EUCLID if mode is MatchMode.PLAIN else mode
    genuine, impostor = [], []
    for (ps, i, gs), row in raw_rows.items():
        rot, order = meta[gs]
        best = select_best(agg_mode, row, rot, order)
        _, sim = scores_from_raw(agg_mode, row[best], profile)
        pid = f"{ps}/{features.probes[ps][1][i]}"
        (genuine if ps == gs else impostor).append((pid, gs, sim))
    genuine.sort()
    impostor.sort()
    config = {
        "mode": mode.value,
        "modality": features.modality,
        "dim": features.dim,
        "scale": scale,
        "seed": seed,
        "params": params.fingerprint.hex(),
    }
    ss = ScoreSet(genuine, impostor, config)
    ss.validate()
    return ss, info


def _dimension_chain(feat: ModalityFeatures) -> str:
    if feat.modality == "face-only":
        return "512"
    if feat.modality == "full-fusion":
        return f"512+{feat.dim - 512}->{feat.dim}"
    return f"{feat.input_dim}->{feat.dim}"


def run_eval(ds: Dataset, modalities=MODALITIES, modes=("plain", "euclid"), params: FheParams | None = None,
             keys: KeySet | None = None, scale: int = DEFAULT_SCALE, seed: int = 0, pca_k: dict | None = None,
             out=None, fraction: float = 0.5, pca_models: dict | None = None) -> dict:
    """Evaluate each modality row under each requested mode; returns the report dict.

    ``pca_models`` maps "single-iris" / "dual-iris-fusion" to pre-trained
    models; the full-fusion row always reuses the dual-iris model.
    """
    params = params or production_params()
    modes = [MatchMode(m).value for m in modes]
    for m in modalities:
        if m not in MODALITIES:
            raise UsageError(f"unknown modality {m!r}")
    encrypted = [m for m in modes if m != "plain"]
    if encrypted and keys is None:
        keys = generate_keyset(params, seed, eval_keys="innerprod" in encrypted)
    pca_k = pca_k or {}
    pca_models = pca_models or {}

    rows = []
    shared_pca = pca_models.get("dual-iris-fusion")
    for modality in MODALITIES:
        if modality not in modalities:
            continue
        pca = shared_pca if modality in ("full-fusion", "dual-iris-fusion") else pca_models.get(modality)
        k = pca_k.get(modality, pca_k.get("dual-iris-fusion") if modality == "full-fusion" else None)
        feat = build_features(ds, modality, seed=seed, k=k, pca=pca, fraction=fraction)
        if modality == "dual-iris-fusion":
            shared_pca = feat.pca
        cols, timing, scores = {}, {}, {}
        for mode in MODES:
            if mode not in modes:
                cols[mode] = None
                continue
            ss, info = build_scores(feat, mode, params, keys, scale, seed)
            cols[mode] = roc_report(ss).as_dict()
            timing[mode] = info
            scores[mode] = ss
        identical = None
        if len(scores) > 1:
            ref = next(iter(scores.values()))
            identical = all(s.genuine == ref.genuine and s.impostor == ref.impostor for s in scores.values())
        pca_info = None
        if feat.pca is not None:
            pca_info = {
                "input_dim": feat.pca.input_dim,
                "k": feat.pca.k,
                "k_requested": k if k is not None else NOMINAL_DIMS["dual-iris-fusion" if modality != "single-iris" else "single-iris"],
                "n_train": len(feat.pca.train_ids) or None,  # unknown for models loaded from file
            }
        rows.append({
            "modality": modality,
            "feature_length": feat.dim,
            "nominal_feature_length": NOMINAL_DIMS[modality],
            "input_dim": INPUT_DIMS.get(modality, 512 + 2 * INPUT_DIMS["single-iris"]),
            "dimension_chain": _dimension_chain(feat),
            "pca": pca_info,
            "subjects": len(feat.gallery),
            "modes": cols,
            "scores_identical_across_modes": identical,
            "timing": timing,
            "warnings": list(feat.warnings),
            "reference": reference.ACCURACY[modality],
        })

    report = {
        "schema": REPORT_SCHEMA,
        "config": {
            "seed": seed,
            "scale": scale,
            "modes": modes,
            "params": params.fingerprint.hex(),
            "ring_degree": params.ring_degree,
            "plain_modulus": params.plain_modulus,
            "pca_fraction": fraction,
            "dataset": ds.meta.get("generator", {}),
        },
        "rows": rows,
        "hardware": hardware_string(),
        "notes": list(reference.NOTES),
    }
    if out is not None:
        write_report(report, out, "eval")
    return report


def hardware_string() -> str:
    import os

    return f"{platform.machine()} {platform.processor() or 'cpu'} x{os.cpu_count()} / {platform.python_implementation()} {platform.python_version()}"
