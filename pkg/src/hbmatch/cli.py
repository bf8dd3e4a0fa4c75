"""Command-line entry point: ``hbmatch <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .errors import HBError


def _setup_logging():
    level = os.environ.get("HB_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _params(name_or_path):
    from .rlwe.params import production_params, toy_params
    from .rlwe.serialize import MAGIC_PARAMS, load

    if name_or_path in (None, "production"):
        return production_params()
    if name_or_path == "toy":
        return toy_params()
    p = Path(name_or_path)
    if p.is_dir():
        p = p / "params.hbpr"
    return load(p, expect=MAGIC_PARAMS)


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


# -- dataset / keys / PCA ------------------------------------------------------


def cmd_synth(a):
    from .biometrics.synth import SynthConfig, synth_generate

    cfg = {}
    if a.config:
        cfg.update(json.loads(Path(a.config).read_text()))
    for name in ("subjects", "sessions", "faces_per_subject", "p_flip", "sigma_face", "max_shift",
                 "face_goat_fraction", "iris_goat_fraction", "goat_face_sigma", "goat_iris_rho", "seed"):
        v = getattr(a, name)
        if v is not None:
            cfg["n_subjects" if name == "subjects" else name] = v
    ds = synth_generate(SynthConfig.from_dict(cfg), a.out)
    _print_json({"out": str(a.out), "subjects": len(ds.subjects),
                 "face_goats": ds.meta["face_goats"], "iris_goats": ds.meta["iris_goats"]})


def cmd_keygen(a):
    from .rlwe.keyset import generate_keyset, save_keyset

    params = _params(a.params)
    ks = generate_keyset(params, a.seed, eval_keys=a.eval_keys)
    sizes = save_keyset(ks, a.out)
    _print_json({"out": str(a.out), "fingerprint": params.fingerprint.hex(), "sizes": sizes})


def cmd_pca_train(a):
    from .biometrics.features import make_split, train_iris_pca
    from .biometrics.pca import save_pca
    from .biometrics.synth import load_dataset

    ds = load_dataset(a.dataset)
    dual = a.modality != "single-iris"
    k = a.dim if a.dim is not None else (500 if dual else 250)
    model = train_iris_pca(ds, make_split(ds, a.seed), dual, k, a.seed, a.fraction)
    save_pca(model, a.out)
    _print_json({"out": str(a.out), "input_dim": model.input_dim, "k": model.k,
                 "n_train": len(model.train_ids), "warnings": list(model.warnings)})


# -- evaluation ----------------------------------------------------------------


def cmd_eval(a):
    from .biometrics.features import MODALITIES
    from .biometrics.pca import load_pca
    from .biometrics.synth import load_dataset
    from .evaluation.pipeline import run_eval
    from .rlwe.keyset import load_keyset

    ds = load_dataset(a.dataset)
    modalities = a.modality or list(MODALITIES)
    modes = a.mode or ["plain", "euclid"]
    keys = load_keyset(a.keys) if a.keys else None
    params = keys.params if keys else _params(a.params)
    pca_models = {}
    for spec in a.pca or []:
        name, _, path = spec.partition("=")
        pca_models[name] = load_pca(path)
    report = run_eval(ds, modalities, modes, params, keys, a.scale, a.seed, out=a.out,
                      fraction=a.fraction, pca_models=pca_models)
    for row in report["rows"]:
        cols = []
        for mode in modes:
            r = row["modes"][mode]
            cols.append(f"{mode}: TAR@0.1%={r['tar_at_far']['0.1%']:.4f} TAR@0.01%={r['tar_at_far']['0.01%']:.4f} EER={r['eer']:.4f}")
        print(f"{row['modality']:<17} dim={row['feature_length']:<5} " + " | ".join(cols))
    print(f"report written to {a.out}")


def cmd_bench(a):
    from .evaluation.bench import run_bench
    from .rlwe.keyset import load_keyset

    keys = load_keyset(a.keys) if a.keys else None
    params = keys.params if keys else _params(a.params)
    r = run_bench(params, a.dim, a.reps, a.mode, a.scale, a.seed, keys, eval_keys=not a.no_eval_keys, out=a.out)
    ref = r["reference"]["timing_s"]
    print(f"encrypted match median {r['encrypted']['median_s'] * 1e3:.1f} ms "
          f"(reference {ref['encrypted_s']} s); plaintext {r['plain']['median_s'] * 1e6:.1f} us "
          f"(reference {ref['plain_s']} s)")
    for name, size in r["sizes"].items():
        refsize = r["reference"]["sizes"].get(name)
        extra = f" (reference {refsize / 1024:.1f} KiB)" if refsize else ""
        print(f"  {name:<20} {size:>10} bytes{extra}")
    if a.out:
        print(f"report written to {a.out}")


# -- protocol ------------------------------------------------------------------


def cmd_serve(a):
    from .protocol.server import serve

    serve(a.listen, a.store, _params(a.params))


def _read_vector(path) -> np.ndarray:
    from .codec import read_fvec, unit_normalize

    return unit_normalize(read_fvec(path))


def _gallery_listing(directory: Path) -> list:
    index = directory / "gallery.json"
    if index.exists():
        items = json.loads(index.read_text())["templates"]
        return [(directory / it["path"], int(it.get("rotation", 0)), it.get("modality", "")) for it in items]
    return [(p, 0, "") for p in sorted(directory.glob("*.fvec"))]


def cmd_enroll(a):
    from .codec import EncodingProfile, pack_template, quantize
    from .protocol.client import enroll_client
    from .rlwe.keyset import load_keyset
    from .rlwe.sampling import make_rng
    from .rlwe.scheme import encrypt

    keys = load_keyset(a.keys, with_secret=False, with_eval=False)
    listing = _gallery_listing(Path(a.gallery))
    if not listing:
        raise SystemExit(f"no templates found in {a.gallery}")
    rng = make_rng(a.seed)
    cts, meta = [], []
    for path, rot, modality in listing:
        v = _read_vector(path)
        qt = quantize(v, EncodingProfile.for_params(keys.params, v.size, a.scale))
        cts.append(encrypt(keys.pk, pack_template(qt, keys.params), rng))
        meta.append({"rotation": rot, "modality": modality})
    receipt = enroll_client(a.server, a.subject, cts, keys.pk, meta)
    _print_json({"subject": receipt.subject, "generation": receipt.generation,
                 "template_ids": receipt.template_ids})


def cmd_verify(a):
    from .protocol.client import verify_client
    from .rlwe.keyset import load_keyset

    keys = load_keyset(a.keys, with_secret=True, with_eval=a.mode == "innerprod")
    out = []
    for path in a.probe:
        r = verify_client(a.server, a.subject, _read_vector(path), keys, a.mode, a.threshold, a.scale)
        out.append({
            "probe": str(path),
            "similarity": r.aggregate_similarity,
            "distance": r.aggregate_distance,
            "rotation": r.rotation,
            "best_index": r.best_index,
            "decision": r.decision,
            "seconds": r.seconds,
        })
    _print_json(out if len(out) != 1 else out[0])


def cmd_templates(a):
    """Write FVEC gallery/probe files for one subject of a dataset."""
    from .biometrics.features import build_features
    from .biometrics.pca import load_pca
    from .biometrics.synth import load_dataset
    from .codec import write_fvec

    ds = load_dataset(a.dataset)
    pca = load_pca(a.pca) if a.pca else None
    feat = build_features(ds, a.modality, seed=a.seed, pca=pca)
    if a.subject not in feat.gallery:
        raise SystemExit(f"subject {a.subject} has no usable samples for {a.modality}")
    out = Path(a.out)
    (out / "gallery").mkdir(parents=True, exist_ok=True)
    (out / "probes").mkdir(parents=True, exist_ok=True)
    vecs, entries = feat.gallery[a.subject]
    items = []
    for i, (v, e) in enumerate(zip(vecs, entries)):
        name = f"g{i:04d}.fvec"
        write_fvec(out / "gallery" / name, v)
        items.append({"path": name, "rotation": e.rotation, "modality": a.modality, "label": e.label})
    (out / "gallery" / "gallery.json").write_text(json.dumps({"templates": items}, indent=1))
    pvecs, labels = feat.probes[a.subject]
    for v, label in zip(pvecs, labels):
        write_fvec(out / "probes" / f"{label}.fvec", v)
    _print_json({"gallery": len(items), "probes": len(labels), "dim": feat.dim, "out": str(out)})


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hbmatch", description="Encrypted biometric template matching")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic face + iris dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--config", help="JSON file with generator settings")
    s.add_argument("--subjects", type=int)
    s.add_argument("--sessions", type=int)
    s.add_argument("--faces-per-subject", type=int)
    s.add_argument("--p-flip", type=float)
    s.add_argument("--sigma-face", type=float)
    s.add_argument("--max-shift", type=int)
    s.add_argument("--face-goat-fraction", type=float)
    s.add_argument("--iris-goat-fraction", type=float)
    s.add_argument("--goat-face-sigma", type=float)
    s.add_argument("--goat-iris-rho", type=float)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("keygen", help="generate and save a key set")
    s.add_argument("--out", required=True)
    s.add_argument("--params", default="production", help="production, toy, or a params file")
    s.add_argument("--seed", type=int)
    s.add_argument("--eval-keys", action="store_true", help="also create relinearization and Galois keys")
    s.set_defaults(func=cmd_keygen)

    s = sub.add_parser("pca-train", help="fit iris PCA on a dataset")
    s.add_argument("--dataset", required=True)
    s.add_argument("--modality", choices=["single-iris", "dual-iris-fusion"], default="dual-iris-fusion")
    s.add_argument("--dim", type=int)
    s.add_argument("--fraction", type=float, default=0.5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_pca_train)

    s = sub.add_parser("eval", help="TAR/FAR/EER report per modality and mode")
    s.add_argument("--dataset", required=True)
    s.add_argument("--modality", action="append",
                   choices=["face-only", "single-iris", "dual-iris-fusion", "full-fusion"])
    s.add_argument("--mode", action="append", choices=["euclid", "innerprod", "plain"])
    s.add_argument("--keys", help="key directory (generated when omitted)")
    s.add_argument("--params", default="production")
    s.add_argument("--pca", action="append", metavar="MODALITY=FILE")
    s.add_argument("--fraction", type=float, default=0.5)
    s.add_argument("--scale", type=int, default=128)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("bench", help="one-to-one match latency and container sizes")
    s.add_argument("--reps", type=int, default=5)
    s.add_argument("--dim", type=int, default=1012)
    s.add_argument("--mode", choices=["euclid", "innerprod"], default="euclid")
    s.add_argument("--keys")
    s.add_argument("--params", default="production")
    s.add_argument("--no-eval-keys", action="store_true", help="skip relin/Galois key generation and sizes")
    s.add_argument("--scale", type=int, default=128)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("serve", help="run the gallery server")
    s.add_argument("--listen", default="127.0.0.1:7461")
    s.add_argument("--store", required=True)
    s.add_argument("--params", required=True, help="params file or key directory")
    s.set_defaults(func=cmd_serve)

    s = sub.add_parser("enroll", help="encrypt a gallery directory and enroll it")
    s.add_argument("--server", required=True)
    s.add_argument("--subject", required=True)
    s.add_argument("--gallery", required=True, help="directory of FVEC files (optionally with gallery.json)")
    s.add_argument("--keys", required=True)
    s.add_argument("--scale", type=int, default=128)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_enroll)

    s = sub.add_parser("verify", help="verify probes against an enrolled subject")
    s.add_argument("--server", required=True)
    s.add_argument("--subject", required=True)
    s.add_argument("--probe", required=True, nargs="+")
    s.add_argument("--keys", required=True)
    s.add_argument("--mode", choices=["euclid", "innerprod"], default="euclid")
    s.add_argument("--threshold", type=float)
    s.add_argument("--scale", type=int, default=128)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("templates", help="export one subject's gallery and probe vectors")
    s.add_argument("--dataset", required=True)
    s.add_argument("--subject", required=True)
    s.add_argument("--modality", default="full-fusion",
                   choices=["face-only", "single-iris", "dual-iris-fusion", "full-fusion"])
    s.add_argument("--pca")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_templates)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (HBError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
