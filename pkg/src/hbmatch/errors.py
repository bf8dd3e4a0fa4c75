"""Exception hierarchy shared by every hbmatch module."""


class HBError(Exception):
    """Base class for all hbmatch errors."""


class ParameterError(HBError, ValueError):
    """Invalid or inconsistent encryption parameters."""


class UsageError(HBError, ValueError):
    """An operation was called with arguments that violate its contract."""


class OverflowSlotError(UsageError):
    """A slot value falls outside the centered plaintext range."""


class CapacityError(UsageError):
    """More values than available plaintext slots."""


class KeyMaterialError(HBError):
    """Required evaluation keys (relinearization or Galois) are missing."""


class DegenerateInputError(HBError, ValueError):
    """Zero vector or similar input that has no meaningful normalization."""


class QuantizationRangeError(HBError, ValueError):
    """A quantized value exceeds the bound allowed by its profile."""


class CorruptionError(HBError):
    """Decrypted slots fall outside the range honest computation can produce."""


class InsufficientDataError(HBError, ValueError):
    """Too few samples for the requested statistic."""


class DecodeError(HBError, ValueError):
    """Base class for binary container and frame decoding failures."""


class BadMagicError(DecodeError):
    pass


class BadVersionError(DecodeError):
    pass


class FingerprintMismatchError(DecodeError):
    pass


class TruncatedDataError(DecodeError):
    pass


class MalformedPayloadError(DecodeError):
    pass


# -- protocol -----------------------------------------------------------


class FrameError(DecodeError):
    """Base class for wire frame decoding failures."""


class FrameTruncatedError(FrameError, TruncatedDataError):
    pass


class UnknownFrameTypeError(FrameError):
    def __init__(self, msg_type: int, payload: bytes = b""):
        super().__init__(f"unknown frame type 0x{msg_type:02x}")
        self.msg_type = msg_type
        self.payload = payload


class FrameTooLargeError(FrameError):
    """Declared frame length exceeds the limit; raised before allocation."""


class SecretKeyRefusedError(HBError):
    """A secret-key container was offered where only public material is allowed."""


class ProtocolError(HBError):
    """Error reported by the remote peer in an ERROR frame."""

    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message


class NotEnrolledError(ProtocolError):
    pass


class ParamsMismatchError(ProtocolError):
    pass


class TransportError(HBError, ConnectionError):
    """Connection failed, closed early, or timed out."""
