"""Binary iris codes: rotation, flattening, dual-eye concatenation, ICOD files."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..errors import BadMagicError, BadVersionError, MalformedPayloadError, TruncatedDataError, UsageError

ROWS, COLS = 128, 512
CODE_BITS = ROWS * COLS
MAX_SHIFT = 7

ICOD_MAGIC = b"ICOD"
ICOD_VERSION = 1
_ICOD_HEADER = struct.Struct("<4sBHH")


@dataclass(frozen=True, eq=False)
class IrisCode:
    bits: np.ndarray  # uint8, ROWS x COLS, entries 0/1
    subject_id: str = ""
    eye: str = "left"
    session: int = 0

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.shape != (ROWS, COLS):
            raise UsageError(f"iris code must be {ROWS}x{COLS}, got {b.shape}")
        if b.dtype != np.uint8:
            if not np.isin(b, (0, 1)).all():
                raise UsageError("iris code entries must be 0 or 1")
            b = b.astype(np.uint8)
        elif b.max(initial=0) > 1:
            raise UsageError("iris code entries must be 0 or 1")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)
        if self.eye not in ("left", "right"):
            raise UsageError("eye must be 'left' or 'right'")

    def __eq__(self, other):
        return isinstance(other, IrisCode) and bool(np.array_equal(self.bits, other.bits))

    __hash__ = None


def rotate_iris(code: IrisCode, shift: int) -> IrisCode:
    """Circular column shift: column j moves to (j + shift) mod 512."""
    rolled = np.roll(code.bits, int(shift) % COLS, axis=1)
    return IrisCode(rolled, code.subject_id, code.eye, code.session)


def flatten(code: IrisCode) -> np.ndarray:
    """Row-major: bit (r, c) lands at r*512 + c."""
    return code.bits.reshape(-1).copy()


def concat_irises(left, right) -> np.ndarray:
    left, right = np.asarray(left), np.asarray(right)
    if left.shape != (CODE_BITS,) or right.shape != (CODE_BITS,):
        raise UsageError(f"each flattened iris must have {CODE_BITS} entries")
    return np.concatenate((left, right))


def rotation_gallery(left: IrisCode, right: IrisCode, max_shift: int = MAX_SHIFT) -> np.ndarray:
    """(2*max_shift+1) x 131072 array, rows ordered by shift -max_shift..max_shift.

    Both eyes get the same shift before concatenation.
    """
    rows = [
        concat_irises(flatten(rotate_iris(left, r)), flatten(rotate_iris(right, r)))
        for r in range(-max_shift, max_shift + 1)
    ]
    return np.stack(rows)


def single_rotations(code: IrisCode, max_shift: int = MAX_SHIFT) -> np.ndarray:
    """Rotation variants of one eye, flattened, ascending shift."""
    return np.stack([flatten(rotate_iris(code, r)) for r in range(-max_shift, max_shift + 1)])


def shifts(max_shift: int = MAX_SHIFT) -> list[int]:
    return list(range(-max_shift, max_shift + 1))


def hamming(a: IrisCode, b: IrisCode) -> int:
    return int(np.count_nonzero(a.bits != b.bits))


def icod_bytes(code: IrisCode) -> bytes:
    head = _ICOD_HEADER.pack(ICOD_MAGIC, ICOD_VERSION, ROWS, COLS)
    return head + np.packbits(code.bits, axis=None, bitorder="big").tobytes()


def icod_from_bytes(data: bytes, subject_id: str = "", eye: str = "left", session: int = 0) -> IrisCode:
    if len(data) < _ICOD_HEADER.size:
        raise TruncatedDataError("ICOD header truncated")
    magic, version, rows, cols = _ICOD_HEADER.unpack_from(data)
    if magic != ICOD_MAGIC:
        raise BadMagicError(f"expected ICOD, got {magic!r}")
    if version != ICOD_VERSION:
        raise BadVersionError(f"unsupported ICOD version {version}")
    if (rows, cols) != (ROWS, COLS):
        raise MalformedPayloadError(f"unsupported iris code shape {rows}x{cols}")
    body = data[_ICOD_HEADER.size :]
    if len(body) != CODE_BITS // 8:
        raise TruncatedDataError("ICOD payload length mismatch")
    bits = np.unpackbits(np.frombuffer(body, dtype=np.uint8), bitorder="big").reshape(ROWS, COLS)
    return IrisCode(bits, subject_id, eye, session)


def write_icod(path, code: IrisCode):
    with open(path, "wb") as fh:
        fh.write(icod_bytes(code))


def read_icod(path, **meta) -> IrisCode:
    with open(path, "rb") as fh:
        return icod_from_bytes(fh.read(), **meta)
