"""Length-prefixed wire frames.

Frame: u32 big-endian payload length, u8 message type, payload.
Payload of every defined type: u32 BE JSON-header length, UTF-8 JSON header,
then zero or more blobs, each a u32 BE length followed by the bytes of one
serialized container, carried verbatim.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import IntEnum

from ..errors import (
    FrameTooLargeError,
    FrameTruncatedError,
    MalformedPayloadError,
    SecretKeyRefusedError,
    UnknownFrameTypeError,
)
from ..rlwe.serialize import MAGIC_SECRET

MAX_FRAME = 64 * 1024 * 1024
HEADER = struct.Struct(">IB")
U32 = struct.Struct(">I")


class MsgType(IntEnum):
    ENROLL_REQ = 0x01
    ENROLL_ACK = 0x02
    VERIFY_REQ = 0x03
    VERIFY_RESP_ITEM = 0x04
    VERIFY_DONE = 0x05
    ERROR = 0x7F


class ErrorCode:
    MALFORMED = "MALFORMED"
    NOT_ENROLLED = "NOT_ENROLLED"
    SECRET_KEY_REFUSED = "SECRET_KEY_REFUSED"
    PARAMS_MISMATCH = "PARAMS_MISMATCH"
    UNKNOWN_TYPE = "UNKNOWN_TYPE"
    KEY_MATERIAL = "KEY_MATERIAL"
    INTERNAL = "INTERNAL"


@dataclass(frozen=True)
class Frame:
    msg_type: int
    payload: bytes = b""


@dataclass
class Message:
    header: dict = field(default_factory=dict)
    blobs: list = field(default_factory=list)


def encode_frame(frame: Frame) -> bytes:
    if len(frame.payload) > MAX_FRAME:
        raise FrameTooLargeError(f"payload of {len(frame.payload)} bytes exceeds {MAX_FRAME}")
    return HEADER.pack(len(frame.payload), int(frame.msg_type)) + frame.payload


def _check_type(msg_type: int, payload: bytes):
    try:
        MsgType(msg_type)
    except ValueError:
        raise UnknownFrameTypeError(msg_type, payload) from None


def decode_frame(data: bytes) -> tuple[Frame, int]:
    """Decode one frame from the front of ``data``; returns (frame, bytes used)."""
    if len(data) < HEADER.size:
        raise FrameTruncatedError("frame header truncated")
    length, msg_type = HEADER.unpack_from(data)
    if length > MAX_FRAME:
        raise FrameTooLargeError(f"declared length {length} exceeds {MAX_FRAME}")
    end = HEADER.size + length
    if len(data) < end:
        raise FrameTruncatedError(f"frame payload truncated ({len(data) - HEADER.size} of {length} bytes)")
    payload = bytes(data[HEADER.size:end])
    _check_type(msg_type, payload)
    return Frame(msg_type, payload), end


def _read_exact(stream, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            break
        buf += chunk
    return bytes(buf)


def read_frame(stream) -> Frame | None:
    """Read one frame from a binary stream; None on clean EOF before a header.

    The length guard runs before the payload is read.  An unknown type is
    raised only after its payload has been consumed, so the stream stays
    aligned for the next frame.
    """
    head = _read_exact(stream, HEADER.size)
    if not head:
        return None
    if len(head) < HEADER.size:
        raise FrameTruncatedError("frame header truncated")
    length, msg_type = HEADER.unpack(head)
    if length > MAX_FRAME:
        raise FrameTooLargeError(f"declared length {length} exceeds {MAX_FRAME}")
    payload = _read_exact(stream, length)
    if len(payload) < length:
        raise FrameTruncatedError(f"frame payload truncated ({len(payload)} of {length} bytes)")
    _check_type(msg_type, payload)
    return Frame(msg_type, payload)


def encode_message(msg: Message) -> bytes:
    head = json.dumps(msg.header, sort_keys=True, separators=(",", ":")).encode()
    parts = [U32.pack(len(head)), head]
    for blob in msg.blobs:
        parts += [U32.pack(len(blob)), bytes(blob)]
    return b"".join(parts)


def decode_message(payload: bytes) -> Message:
    if not payload:
        return Message()
    if len(payload) < U32.size:
        raise MalformedPayloadError("payload shorter than its header length field")
    (n,) = U32.unpack_from(payload)
    pos = U32.size + n
    if pos > len(payload):
        raise MalformedPayloadError("JSON header runs past the payload")
    try:
        header = json.loads(payload[U32.size:pos].decode())
    except (UnicodeDecodeError, ValueError) as e:
        raise MalformedPayloadError(f"bad JSON header: {e}") from None
    if not isinstance(header, dict):
        raise MalformedPayloadError("JSON header must be an object")
    blobs = []
    while pos < len(payload):
        if pos + U32.size > len(payload):
            raise MalformedPayloadError("blob length field truncated")
        (size,) = U32.unpack_from(payload, pos)
        pos += U32.size
        if pos + size > len(payload):
            raise MalformedPayloadError("blob runs past the payload")
        blobs.append(payload[pos:pos + size])
        pos += size
    return Message(header, blobs)


def refuse_secret(msg: Message):
    for blob in msg.blobs:
        if bytes(blob[:4]) == MAGIC_SECRET:
            raise SecretKeyRefusedError("secret-key containers are never accepted")


def make_frame(msg_type: MsgType, header: dict | None = None, blobs=()) -> Frame:
    if header is None and not blobs:
        return Frame(msg_type, b"")
    msg = Message(header or {}, list(blobs))
    refuse_secret(msg)
    return Frame(msg_type, encode_message(msg))


def parse_frame(frame: Frame) -> Message:
    """Decode the payload and apply the secret-key policy."""
    msg = decode_message(frame.payload)
    refuse_secret(msg)
    return msg


def error_frame(code: str, message: str = "") -> Frame:
    return make_frame(MsgType.ERROR, {"code": code, "message": message})
