"""Key-holder client: encrypts, enrolls, verifies, decrypts locally."""

from __future__ import annotations

import socket
import time
from dataclasses import dataclass

import numpy as np

from ..codec import DEFAULT_SCALE, EncodingProfile, QuantizedTemplate, pack_template, quantize
from ..errors import (
    FrameError,
    KeyMaterialError,
    NotEnrolledError,
    ParamsMismatchError,
    ProtocolError,
    SecretKeyRefusedError,
    TransportError,
    UsageError,
)
from ..matcher import MatchMode, MatchResult, build_result, decrypt_raw
from ..rlwe.keyset import KeySet
from ..rlwe.sampling import make_rng
from ..rlwe.scheme import Ciphertext, encrypt
from ..rlwe.serialize import MAGIC_CIPHERTEXT, deserialize, serialize
from .frames import ErrorCode, Frame, MsgType, encode_frame, make_frame, parse_frame, read_frame
from .server import parse_address

_ERRORS = {
    ErrorCode.NOT_ENROLLED: NotEnrolledError,
    ErrorCode.PARAMS_MISMATCH: ParamsMismatchError,
}


class WireTap:
    """Records every byte a Connection sends and receives."""

    def __init__(self):
        self.sent = bytearray()
        self.received = bytearray()
        self.frames = []  # (direction, Frame)

    def __call__(self, direction: str, data: bytes, frame: Frame):
        (self.sent if direction == "out" else self.received).extend(data)
        self.frames.append((direction, frame))

    def contains(self, needle: bytes) -> bool:
        return needle in self.sent or needle in self.received

    def blob_magics(self) -> set:
        out = set()
        for _, f in self.frames:
            if f.payload:
                out.update(bytes(b[:4]) for b in parse_frame(f).blobs)
        return out


class Connection:
    def __init__(self, address, timeout: float | None = 600.0, tap=None):
        host, port = parse_address(address) if isinstance(address, str) else address
        self.tap = tap
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as e:
            raise TransportError(f"cannot connect to {host}:{port}: {e}") from e
        self.rfile = self.sock.makefile("rb")

    def send(self, frame: Frame):
        data = encode_frame(frame)
        if self.tap:
            self.tap("out", data, frame)
        try:
            self.sock.sendall(data)
        except OSError as e:
            raise TransportError(f"send failed: {e}") from e

    def recv(self) -> Frame:
        try:
            frame = read_frame(self.rfile)
        except FrameError as e:
            raise TransportError(f"bad frame from server: {e}") from e
        except OSError as e:
            raise TransportError(f"receive failed: {e}") from e
        if frame is None:
            raise TransportError("server closed the connection")
        if self.tap:
            self.tap("in", encode_frame(frame), frame)
        if frame.msg_type == MsgType.ERROR:
            h = parse_frame(frame).header
            code, text = h.get("code", "?"), h.get("message", "")
            if code == ErrorCode.SECRET_KEY_REFUSED:
                raise SecretKeyRefusedError(text)
            if code == ErrorCode.KEY_MATERIAL:
                raise KeyMaterialError(text)
            raise _ERRORS.get(code, ProtocolError)(code, text)
        return frame

    def close(self):
        try:
            self.rfile.close()
        finally:
            self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class EnrollReceipt:
    subject: str
    template_ids: list
    generation: int
    public_key: str


def _blob(obj) -> bytes:
    return bytes(obj) if isinstance(obj, (bytes, bytearray, memoryview)) else serialize(obj)


def enroll_client(address, subject_id: str, templates, public_key, meta=None, modality: str = "",
                  tap=None, timeout: float | None = 600.0) -> EnrollReceipt:
    """Send already-encrypted templates and the public key; returns the receipt.

    ``meta`` is one dict per template (``rotation``, ``modality``); by
    default every template gets rotation 0.
    """
    templates = list(templates)
    if not templates:
        raise UsageError("nothing to enroll")
    blobs = [_blob(public_key)] + [_blob(t) for t in templates]
    meta = meta or [{"rotation": 0, "modality": modality} for _ in templates]
    pk = public_key if not isinstance(public_key, (bytes, bytearray)) else None
    fp = pk.params.fingerprint.hex() if pk is not None else _blob_params(blobs[0])
    with Connection(address, timeout, tap) as conn:
        conn.send(make_frame(MsgType.ENROLL_REQ, {"subject": subject_id, "params": fp, "templates": meta}, blobs))
        frame = conn.recv()
    if frame.msg_type != MsgType.ENROLL_ACK:
        raise ProtocolError(ErrorCode.MALFORMED, f"unexpected reply type {frame.msg_type}")
    h = parse_frame(frame).header
    return EnrollReceipt(h["subject"], list(h["template_ids"]), int(h["generation"]), h["public_key"])


def _blob_params(blob: bytes) -> str:
    from ..rlwe.serialize import read_header

    return read_header(blob)[1].hex()


def encrypt_probe(probe, keys: KeySet, scale: int = DEFAULT_SCALE, seed=None) -> tuple[Ciphertext, EncodingProfile]:
    params = keys.params
    if isinstance(probe, QuantizedTemplate):
        qt = probe
    else:
        v = np.asarray(probe, dtype=np.float64)
        qt = quantize(v, EncodingProfile.for_params(params, v.size, scale))
    return encrypt(keys.pk, pack_template(qt, params), make_rng(seed)), qt.profile


def verify_client(address, subject_id: str, probe, keys: KeySet, mode="euclid", threshold=None,
                  scale: int = DEFAULT_SCALE, seed=None, tap=None, timeout: float | None = 600.0) -> MatchResult:
    """Encrypt the probe, stream back one encrypted result per gallery
    template, decrypt and aggregate locally."""
    mode = MatchMode(mode)
    if mode is MatchMode.PLAIN:
        raise UsageError("remote verification is encrypted; use euclid or innerprod")
    sk = keys.require_secret()
    if mode is MatchMode.INNERPROD and (keys.rk is None or keys.gks is None):
        raise KeyMaterialError("inner-product mode needs relinearization and Galois keys")
    start = time.perf_counter()
    ct, profile = encrypt_probe(probe, keys, scale, seed)
    blobs = [serialize(ct)]
    if mode is MatchMode.INNERPROD:
        blobs += [serialize(keys.rk), serialize(keys.gks)]
    header = {"subject": subject_id, "mode": mode.value, "params": keys.params.fingerprint.hex()}
    raw, rotations, orders = [], [], []
    with Connection(address, timeout, tap) as conn:
        conn.send(make_frame(MsgType.VERIFY_REQ, header, blobs))
        while True:
            frame = conn.recv()
            if frame.msg_type == MsgType.VERIFY_DONE:
                break
            if frame.msg_type != MsgType.VERIFY_RESP_ITEM:
                raise ProtocolError(ErrorCode.MALFORMED, f"unexpected reply type {frame.msg_type}")
            msg = parse_frame(frame)
            res = deserialize(msg.blobs[0], keys.params, MAGIC_CIPHERTEXT)
            raw.append(decrypt_raw(mode, res, sk, profile))
            rotations.append(int(msg.header.get("rotation", 0)))
            orders.append(int(msg.header.get("order", len(orders))))
    if not raw:
        raise ProtocolError(ErrorCode.MALFORMED, "server returned no results")
    return build_result(mode, raw, profile, rotations, orders, time.perf_counter() - start, threshold)
