"""Enrollment/verification wire protocol, gallery store, server and client."""

from .client import EnrollReceipt, WireTap, encrypt_probe, enroll_client, verify_client
from .frames import ErrorCode, Frame, MsgType, decode_frame, encode_frame
from .server import make_server, parse_address, serve, start_background
from .store import GalleryStore

__all__ = [
    "EnrollReceipt",
    "ErrorCode",
    "Frame",
    "GalleryStore",
    "MsgType",
    "WireTap",
    "decode_frame",
    "encode_frame",
    "encrypt_probe",
    "enroll_client",
    "make_server",
    "parse_address",
    "serve",
    "start_background",
    "verify_client",
]
