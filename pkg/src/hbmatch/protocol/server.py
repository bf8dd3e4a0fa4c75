"""Gallery server: stores encrypted templates and evaluates matches blind.

The server only ever holds public material: public keys, fresh template
ciphertexts and (for inner-product requests) relinearization and Galois
keys sent along with the request.  Secret-key containers are refused at
the frame layer before any deserialization.
"""

from __future__ import annotations

import logging
import socketserver
import threading

from ..errors import (
    DecodeError,
    FingerprintMismatchError,
    FrameTooLargeError,
    FrameTruncatedError,
    KeyMaterialError,
    SecretKeyRefusedError,
    UnknownFrameTypeError,
    UsageError,
)
from ..matcher import MatchMode, server_evaluate
from ..rlwe.params import FheParams
from ..rlwe.serialize import (
    MAGIC_CIPHERTEXT,
    MAGIC_GALOIS,
    MAGIC_PUBLIC,
    MAGIC_RELIN,
    deserialize,
    serialize,
)
from .frames import ErrorCode, Frame, MsgType, encode_frame, error_frame, make_frame, parse_frame, read_frame
from .store import GalleryStore

log = logging.getLogger(__name__)


class RequestError(Exception):
    def __init__(self, code: str, message: str = ""):
        super().__init__(message)
        self.code = code
        self.message = message


def parse_address(text: str) -> tuple[str, int]:
    host, sep, port = str(text).rpartition(":")
    if not sep or not port.isdigit():
        raise UsageError(f"address must look like HOST:PORT, got {text!r}")
    return host or "127.0.0.1", int(port)


class GalleryService:
    """Request handling independent of the socket layer."""

    def __init__(self, store: GalleryStore):
        self.store = store
        self.params: FheParams = store.params

    def _check_params(self, header: dict):
        fp = header.get("params")
        if fp != self.params.fingerprint.hex():
            raise RequestError(ErrorCode.PARAMS_MISMATCH, f"server params {self.params.fingerprint.hex()}, request {fp}")

    def _subject(self, header: dict) -> str:
        sid = header.get("subject")
        if not isinstance(sid, str) or not sid:
            raise RequestError(ErrorCode.MALFORMED, "missing subject id")
        return sid

    def enroll(self, header: dict, blobs: list) -> Frame:
        self._check_params(header)
        sid = self._subject(header)
        if len(blobs) < 2 or bytes(blobs[0][:4]) != MAGIC_PUBLIC:
            raise RequestError(ErrorCode.MALFORMED, "enrollment carries a public key followed by templates")
        meta = header.get("templates")
        if meta is not None and (not isinstance(meta, list) or len(meta) != len(blobs) - 1):
            raise RequestError(ErrorCode.MALFORMED, "template metadata does not match the blobs")
        entry = self.store.enroll(sid, bytes(blobs[0]), [bytes(b) for b in blobs[1:]], meta)
        log.info("enrolled %s: %d templates, generation %d", sid, len(entry["templates"]), entry["generation"])
        return make_frame(MsgType.ENROLL_ACK, {
            "subject": sid,
            "template_ids": [t["id"] for t in entry["templates"]],
            "generation": entry["generation"],
            "public_key": entry["public_key"],
        })

    def verify(self, header: dict, blobs: list, send):
        self._check_params(header)
        sid = self._subject(header)
        try:
            mode = MatchMode(header.get("mode", "euclid"))
        except ValueError:
            raise RequestError(ErrorCode.MALFORMED, f"unknown mode {header.get('mode')!r}") from None
        if mode is MatchMode.PLAIN:
            raise RequestError(ErrorCode.MALFORMED, "plain mode is not served")
        by_magic = {}
        for b in blobs:
            by_magic.setdefault(bytes(b[:4]), []).append(bytes(b))
        if len(by_magic.get(MAGIC_CIPHERTEXT, ())) != 1:
            raise RequestError(ErrorCode.MALFORMED, "verification carries exactly one probe ciphertext")
        probe = deserialize(by_magic[MAGIC_CIPHERTEXT][0], self.params, MAGIC_CIPHERTEXT)
        rk = gks = None
        if mode is MatchMode.INNERPROD:
            if MAGIC_RELIN in by_magic:
                rk = deserialize(by_magic[MAGIC_RELIN][0], self.params, MAGIC_RELIN)
            if MAGIC_GALOIS in by_magic:
                gks = deserialize(by_magic[MAGIC_GALOIS][0], self.params, MAGIC_GALOIS)
        templates = self.store.load_templates(sid)
        if not templates:
            raise RequestError(ErrorCode.NOT_ENROLLED, f"subject {sid!r} is not enrolled")
        for i, (t, blob) in enumerate(templates):
            ct = deserialize(blob, self.params, MAGIC_CIPHERTEXT)
            res = server_evaluate(mode, probe, ct, rk, gks)
            send(make_frame(MsgType.VERIFY_RESP_ITEM, {
                "index": i,
                "template_id": t["id"],
                "rotation": t["rotation"],
                "order": t["order"],
                "modality": t["modality"],
            }, [serialize(res)]))
        send(Frame(MsgType.VERIFY_DONE, b""))

    def handle(self, frame: Frame, send):
        """Dispatch one request frame; errors become ERROR frames."""
        try:
            msg = parse_frame(frame)
            if frame.msg_type == MsgType.ENROLL_REQ:
                send(self.enroll(msg.header, msg.blobs))
            elif frame.msg_type == MsgType.VERIFY_REQ:
                self.verify(msg.header, msg.blobs, send)
            else:
                raise RequestError(ErrorCode.MALFORMED, f"frame type {frame.msg_type} is not a request")
        except RequestError as e:
            send(error_frame(e.code, e.message))
        except SecretKeyRefusedError as e:
            log.warning("refused secret-key container")
            send(error_frame(ErrorCode.SECRET_KEY_REFUSED, str(e)))
        except FingerprintMismatchError as e:
            send(error_frame(ErrorCode.PARAMS_MISMATCH, str(e)))
        except KeyMaterialError as e:
            send(error_frame(ErrorCode.KEY_MATERIAL, str(e)))
        except (DecodeError, UsageError) as e:
            send(error_frame(ErrorCode.MALFORMED, str(e)))
        except Exception as e:  # noqa: BLE001 - keep the connection alive
            log.exception("request failed")
            send(error_frame(ErrorCode.INTERNAL, type(e).__name__))


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        service: GalleryService = self.server.service
        lock = threading.Lock()

        def send(frame: Frame):
            data = encode_frame(frame)
            with lock:
                self.wfile.write(data)
                self.wfile.flush()

        while True:
            try:
                frame = read_frame(self.rfile)
            except FrameTooLargeError as e:
                log.warning("closing connection: %s", e)
                return
            except FrameTruncatedError:
                return
            except UnknownFrameTypeError as e:
                send(error_frame(ErrorCode.UNKNOWN_TYPE, str(e)))
                continue
            except OSError:
                return
            if frame is None:
                return
            try:
                service.handle(frame, send)
            except OSError:
                return


class GalleryServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, service: GalleryService):
        self.service = service
        super().__init__(address, _Handler)

    @property
    def address(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"


def make_server(listen, store_root, params: FheParams) -> GalleryServer:
    if isinstance(listen, str):
        listen = parse_address(listen)
    return GalleryServer(listen, GalleryService(GalleryStore(store_root, params)))


def serve(listen, store_root, params: FheParams):
    """Run until interrupted."""
    server = make_server(listen, store_root, params)
    log.warning("serving on %s, store %s", server.address, store_root)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def start_background(listen, store_root, params: FheParams) -> tuple[GalleryServer, threading.Thread]:
    server = make_server(listen, store_root, params)
    th = threading.Thread(target=server.serve_forever, name="hbmatch-server", daemon=True)
    th.start()
    return server, th
