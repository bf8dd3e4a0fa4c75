"""Encrypted gallery store: one ciphertext file per template plus a JSON manifest.

Layout under the root::

    manifest.json
    keys/<key id>.hbpk
    subjects/<subject>/<generation>/<template id>.hbct

Every file is written to a temporary name and renamed into place.  An
enrollment writes its ciphertexts into a fresh generation directory and then
swaps the manifest, so a crash leaves either the old or the new entry.
Unreferenced generations are removed by ``gc``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import os
import re
import shutil
import threading
from pathlib import Path

from ..errors import MalformedPayloadError, SecretKeyRefusedError, UsageError
from ..rlwe.params import FheParams
from ..rlwe.serialize import MAGIC_CIPHERTEXT, MAGIC_PUBLIC, MAGIC_SECRET, deserialize

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
FAULT_ENV = "HB_FAULT_AFTER_FILES"
_SID = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]{0,63}$")


def key_id(pk_bytes: bytes) -> str:
    return hashlib.sha256(pk_bytes).hexdigest()[:32]


def valid_subject_id(sid) -> bool:
    return isinstance(sid, str) and bool(_SID.match(sid)) and sid not in (".", "..")


def _fsync_dir(path: Path):
    try:
        fd = os.open(path, os.O_RDONLY)
    except OSError:
        return
    try:
        os.fsync(fd)
    except OSError:
        pass
    finally:
        os.close(fd)


def atomic_write(path: Path, data: bytes):
    tmp = path.with_name(f".{path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
    with open(tmp, "wb") as f:
        f.write(data)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)
    _fsync_dir(path.parent)


class _Fault:
    """Test hook: right after the N-th file write the process dies without cleanup."""

    def __init__(self):
        v = os.environ.get(FAULT_ENV)
        self.left = int(v) if v else None

    def tick(self):
        if self.left is None:
            return
        self.left -= 1
        if self.left <= 0:
            log.error("fault injection: exiting mid-write")
            os._exit(75)


class GalleryStore:
    def __init__(self, root, params: FheParams):
        self.root = Path(root)
        self.params = params
        self._lock = threading.Lock()
        self._subject_locks: dict = {}
        self._fault = _Fault()
        (self.root / "keys").mkdir(parents=True, exist_ok=True)
        (self.root / "subjects").mkdir(parents=True, exist_ok=True)
        self._manifest = self._load_manifest()

    # -- manifest -------------------------------------------------------------

    def _empty(self) -> dict:
        return {"format": "hbmatch-store", "version": 1, "params": self.params.fingerprint.hex(), "subjects": {}}

    def _load_manifest(self) -> dict:
        path = self.root / MANIFEST
        if not path.exists():
            return self._empty()
        m = json.loads(path.read_text())
        if m.get("format") != "hbmatch-store" or not isinstance(m.get("subjects"), dict):
            raise MalformedPayloadError(f"{path} is not a gallery manifest")
        if m.get("params") != self.params.fingerprint.hex():
            raise UsageError("store was created with different encryption parameters")
        return m

    def _write_manifest(self, m: dict):
        atomic_write(self.root / MANIFEST, json.dumps(m, indent=1, sort_keys=True).encode())
        self._fault.tick()

    def manifest(self) -> dict:
        with self._lock:
            return copy.deepcopy(self._manifest)

    def subjects(self) -> list:
        with self._lock:
            return sorted(self._manifest["subjects"])

    def entry(self, sid: str) -> dict | None:
        with self._lock:
            e = self._manifest["subjects"].get(sid)
            return copy.deepcopy(e)

    def _subject_lock(self, sid: str) -> threading.Lock:
        with self._lock:
            return self._subject_locks.setdefault(sid, threading.Lock())

    # -- writes ---------------------------------------------------------------

    def _write_blob(self, path: Path, blob: bytes, magic: bytes):
        got = bytes(blob[:4])
        if got == MAGIC_SECRET:
            raise SecretKeyRefusedError("refusing to store a secret key")
        if got != magic:
            raise MalformedPayloadError(f"expected {magic!r} container, got {got!r}")
        path.parent.mkdir(parents=True, exist_ok=True)
        atomic_write(path, blob)
        self._fault.tick()

    def put_public_key(self, pk_bytes: bytes) -> str:
        deserialize(pk_bytes, self.params, MAGIC_PUBLIC)
        kid = key_id(pk_bytes)
        path = self.root / "keys" / f"{kid}.hbpk"
        if not path.exists():
            self._write_blob(path, pk_bytes, MAGIC_PUBLIC)
        return kid

    def public_key_bytes(self, kid: str) -> bytes:
        return (self.root / "keys" / f"{kid}.hbpk").read_bytes()

    def enroll(self, sid: str, pk_bytes: bytes, ct_blobs: list, meta: list | None = None) -> dict:
        """Replace ``sid``'s entry with the given ciphertexts; returns the new entry.

        ``meta`` holds one dict per ciphertext with optional ``rotation`` and
        ``modality``; enrollment order is the list order.
        """
        if not valid_subject_id(sid):
            raise UsageError(f"invalid subject id {sid!r}")
        if not ct_blobs:
            raise UsageError("enrollment needs at least one template")
        meta = meta or [{} for _ in ct_blobs]
        if len(meta) != len(ct_blobs):
            raise UsageError("one metadata record per template is required")
        for blob in ct_blobs:
            if bytes(blob[:4]) == MAGIC_SECRET:
                raise SecretKeyRefusedError("refusing to store a secret key")
            ct = deserialize(blob, self.params, MAGIC_CIPHERTEXT)
            if ct.degree != 1:
                raise UsageError("gallery templates must be fresh degree-1 ciphertexts")

        with self._subject_lock(sid):
            kid = self.put_public_key(pk_bytes)
            old = self.entry(sid)
            gen = (old["generation"] + 1) if old else 1
            rel_dir = Path("subjects") / sid / f"{gen:06d}"
            shutil.rmtree(self.root / rel_dir, ignore_errors=True)  # leftovers of a crashed attempt
            templates = []
            for order, (blob, m) in enumerate(zip(ct_blobs, meta)):
                tid = f"t{order:04d}"
                rel = rel_dir / f"{tid}.hbct"
                self._write_blob(self.root / rel, blob, MAGIC_CIPHERTEXT)
                templates.append({
                    "id": tid,
                    "order": order,
                    "rotation": int(m.get("rotation", 0)),
                    "modality": str(m.get("modality", "")),
                    "path": rel.as_posix(),
                })
            entry = {"generation": gen, "public_key": kid, "templates": templates}
            with self._lock:
                new = copy.deepcopy(self._manifest)
                new["subjects"][sid] = entry
                self._write_manifest(new)
                self._manifest = new
            if old:
                self._remove_generation(sid, old["generation"])
        return copy.deepcopy(entry)

    def _remove_generation(self, sid: str, gen: int):
        shutil.rmtree(self.root / "subjects" / sid / f"{gen:06d}", ignore_errors=True)

    # -- reads ----------------------------------------------------------------

    def load_templates(self, sid: str) -> list:
        """[(template record, ciphertext bytes)] for one subject, or [] if unknown."""
        for _ in range(3):
            e = self.entry(sid)
            if e is None:
                return []
            try:
                return [(t, (self.root / t["path"]).read_bytes()) for t in e["templates"]]
            except FileNotFoundError:
                continue  # replaced by a concurrent enrollment; reread the manifest
        raise UsageError(f"templates of {sid!r} keep changing under the reader")

    # -- maintenance ----------------------------------------------------------

    def gc(self) -> list:
        """Delete generation directories and temp files the manifest does not reference."""
        removed = []
        with self._lock:
            live = {
                (sid, f"{e['generation']:06d}") for sid, e in self._manifest["subjects"].items()
            }
        for sub in sorted((self.root / "subjects").iterdir()):
            if not sub.is_dir():
                continue
            for gen in sorted(sub.iterdir()):
                if (sub.name, gen.name) not in live:
                    shutil.rmtree(gen, ignore_errors=True)
                    removed.append(gen)
            if not any(sub.iterdir()):
                sub.rmdir()
        for tmp in self.root.rglob(".*.tmp"):
            tmp.unlink(missing_ok=True)
            removed.append(tmp)
        return removed

    def check(self) -> list:
        """Problems found: missing or undecodable files, secret keys, stray magics."""
        problems = []
        m = self.manifest()
        for sid, e in m["subjects"].items():
            for t in e["templates"]:
                path = self.root / t["path"]
                try:
                    deserialize(path.read_bytes(), self.params, MAGIC_CIPHERTEXT)
                except Exception as ex:  # noqa: BLE001 - reported, not raised
                    problems.append(f"{sid}/{t['id']}: {ex}")
            if not (self.root / "keys" / f"{e['public_key']}.hbpk").exists():
                problems.append(f"{sid}: public key {e['public_key']} missing")
        for magic, path in scan_magics(self.root):
            if magic == MAGIC_SECRET:
                problems.append(f"secret key present at {path}")
            elif magic not in (MAGIC_CIPHERTEXT, MAGIC_PUBLIC):
                problems.append(f"unexpected container {magic!r} at {path}")
        return problems


def scan_magics(root) -> list:
    """(magic, path) for every non-manifest file under ``root``."""
    out = []
    for path in sorted(Path(root).rglob("*")):
        if not path.is_file() or path.name == MANIFEST:
            continue
        with open(path, "rb") as f:
            out.append((f.read(4), path))
    return out
