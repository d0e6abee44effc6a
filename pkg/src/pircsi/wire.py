"""Byte-level framing and a small TCP client/server for remote retrieval.

Frame layout: one message-type byte, a u32 little-endian payload length, then
the payload.  Query payloads carry a model byte, a case byte (0 for the
first model and for the query-free second-model case), a u16 set count, and
per set a u16 size, the 1-based indices as u32 words, then the coefficients
in the canonical field-element encoding.  Answer payloads carry a u16 count
followed by that many canonical element encodings.

Servers greet with (q, m, K) on request, so a client can reconstruct the
field parameters: the reduction modulus is derived deterministically from
(q, m) on both sides.
"""

import os
import socket
import socketserver
import struct
import threading

from .errors import ParameterError, ProtocolError, WireParseError
from .field import FieldParams
from .model import MODEL_I, MODEL_II, Database
from . import protocol_csi2, protocol_rp
from .protocol_csi2 import CASE_TAGS, Csi2Query
from .protocol_rp import Answer, Query, QuerySet

MSG_QUERY = 0x01
MSG_ANSWER = 0x02
MSG_ERROR = 0x03
MSG_HELLO = 0x04

_FRAME_HEADER = struct.Struct("<BI")
_HELLO_BODY = struct.Struct("<III")
MAX_FRAME_BYTES = 1 << 20

_MODEL_BYTES = {MODEL_I: 1, MODEL_II: 2}


def default_port() -> int:
    """Port used when none is given; override with the PIRCSI_PORT variable."""
    return int(os.environ.get("PIRCSI_PORT", "7641"))


# -- framing ----------------------------------------------------------------


def encode_frame(msg_type: int, payload: bytes) -> bytes:
    if msg_type not in (MSG_QUERY, MSG_ANSWER, MSG_ERROR, MSG_HELLO):
        raise ParameterError(f"unknown frame type {msg_type!r}")
    if len(payload) > MAX_FRAME_BYTES:
        raise ParameterError(f"payload of {len(payload)} bytes exceeds the frame cap")
    return _FRAME_HEADER.pack(msg_type, len(payload)) + payload


def decode_frame(data: bytes) -> tuple[int, bytes, int]:
    """Split one frame off the front of data; returns (type, payload, used)."""
    if len(data) < _FRAME_HEADER.size:
        raise WireParseError("truncated frame header", len(data))
    msg_type, length = _FRAME_HEADER.unpack_from(data, 0)
    if msg_type not in (MSG_QUERY, MSG_ANSWER, MSG_ERROR, MSG_HELLO):
        raise WireParseError(f"unknown frame type 0x{msg_type:02x}", 0)
    if length > MAX_FRAME_BYTES:
        raise WireParseError(f"declared length {length} exceeds the frame cap", 1)
    end = _FRAME_HEADER.size + length
    if len(data) < end:
        raise WireParseError("frame payload shorter than declared", len(data))
    return msg_type, data[_FRAME_HEADER.size : end], end


# -- query payloads ---------------------------------------------------------


class _Cursor:
    """Byte reader that turns truncation into parse errors with offsets."""

    __slots__ = ("data", "pos")

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise WireParseError(f"truncated {what}", self.pos)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def _encode_sets(sets, params: FieldParams) -> bytes:
    parts = [struct.pack("<H", len(sets))]
    for qs in sets:
        parts.append(struct.pack("<H", len(qs.indices)))
        parts.append(struct.pack(f"<{len(qs.indices)}I", *qs.indices))
        for c in qs.coeffs:
            parts.append(params.scalar(c).to_bytes())
    return b"".join(parts)


def encode_query(query, params: FieldParams) -> bytes:
    """Query payload bytes (frame not included)."""
    if isinstance(query, Query):
        model_byte, case_byte = _MODEL_BYTES[MODEL_I], 0
    elif isinstance(query, Csi2Query):
        model_byte, case_byte = _MODEL_BYTES[MODEL_II], query.case_tag
    else:
        raise ParameterError(f"cannot encode {type(query).__name__}")
    return struct.pack("<BB", model_byte, case_byte) + _encode_sets(query.sets, params)


def decode_query(data: bytes, params: FieldParams, K: int):
    """Parse a query payload.  Total on arbitrary bytes: every failure is a
    WireParseError carrying the byte offset, never a crash."""
    cur = _Cursor(data)
    model_byte = cur.u8("model byte")
    if model_byte not in (1, 2):
        raise WireParseError(f"unknown model byte {model_byte}", 0)
    case_byte = cur.u8("case byte")
    if model_byte == 1 and case_byte != 0:
        raise WireParseError("first-model queries use case byte 0", 1)
    if model_byte == 2 and case_byte not in CASE_TAGS:
        raise WireParseError(f"unknown case byte {case_byte}", 1)
    n_sets = cur.u16("set count")
    sets = []
    for _ in range(n_sets):
        size = cur.u16("set size")
        if size == 0:
            raise WireParseError("empty query set", cur.pos - 2)
        indices = []
        for _ in range(size):
            at = cur.pos
            idx = cur.u32("index")
            if not 1 <= idx <= K:
                raise WireParseError(f"index {idx} outside [1, {K}]", at)
            if idx in indices:
                raise WireParseError(f"repeated index {idx} inside a set", at)
            indices.append(idx)
        coeffs = []
        for _ in range(size):
            at = cur.pos
            words = struct.unpack(
                f"<{params.m}H", cur.take(params.element_bytes, "coefficient")
            )
            if any(words[1:]):
                raise WireParseError("coefficient is not a base-field scalar", at)
            c = words[0]
            if not 1 <= c <= params.q - 1:
                raise WireParseError(f"coefficient {c} outside [1, {params.q - 1}]", at)
            coeffs.append(c)
        sets.append(QuerySet(tuple(indices), tuple(coeffs)))
    if cur.pos != len(data):
        raise WireParseError("trailing bytes after the query", cur.pos)

    if model_byte == 1:
        if not sets:
            raise WireParseError("first-model query carries no sets", 2)
        sizes = {len(qs.indices) for qs in sets}
        if len(sizes) != 1:
            raise WireParseError("first-model sets must share one size", 4)
        size = sizes.pop()
        if size > K:
            raise WireParseError(f"set size {size} exceeds the database", 4)
        return Query(sets=tuple(sets), K=K, M=size - 1)

    arity = {
        protocol_csi2.CASE_TRIVIAL: 0,
        protocol_csi2.CASE_SINGLE: 1,
        protocol_csi2.CASE_DISJOINT: 2,
        protocol_csi2.CASE_OVERLAP: 2,
        protocol_csi2.CASE_FULL: 1,
    }[case_byte]
    if len(sets) != arity:
        raise WireParseError(
            f"case {case_byte} carries {arity} sets, payload has {len(sets)}", 2
        )
    if case_byte == protocol_csi2.CASE_SINGLE and len(sets[0].indices) != 1:
        raise WireParseError("single-probe case takes exactly one index", 4)
    if case_byte == protocol_csi2.CASE_FULL and len(sets[0].indices) != K:
        raise WireParseError("full case must cover the whole database", 4)
    if arity == 2 and len(sets[0].indices) != len(sets[1].indices):
        raise WireParseError("paired sets must have equal sizes", 4)
    return Csi2Query(sets=tuple(sets), case_tag=case_byte)


# -- answer payloads --------------------------------------------------------


def encode_answer(answer: Answer) -> bytes:
    parts = [struct.pack("<H", len(answer.values))]
    parts.extend(x.to_bytes() for x in answer.values)
    return b"".join(parts)


def decode_answer(data: bytes, params: FieldParams) -> Answer:
    cur = _Cursor(data)
    count = cur.u16("element count")
    values = []
    for _ in range(count):
        at = cur.pos
        raw = cur.take(params.element_bytes, "element")
        try:
            values.append(params.from_bytes(raw))
        except ParameterError as exc:
            raise WireParseError(str(exc), at) from None
    if cur.pos != len(data):
        raise WireParseError("trailing bytes after the answer", cur.pos)
    return Answer(tuple(values))


# -- hello payloads ---------------------------------------------------------


def encode_hello(params: FieldParams, K: int) -> bytes:
    return _HELLO_BODY.pack(params.q, params.m, K)


def decode_hello(data: bytes) -> tuple[FieldParams, int]:
    if len(data) != _HELLO_BODY.size:
        raise WireParseError("hello payload must be 12 bytes", len(data))
    q, m, K = _HELLO_BODY.unpack(data)
    try:
        return FieldParams(q, m), K
    except ParameterError as exc:
        raise WireParseError(str(exc), 0) from None


# -- sockets ----------------------------------------------------------------


def _read_exact(rfile, n: int) -> bytes | None:
    chunks = []
    remaining = n
    while remaining:
        chunk = rfile.read(remaining)
        if not chunk:
            return None
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        db: Database = self.server.db  # type: ignore[attr-defined]
        while True:
            header = _read_exact(self.rfile, _FRAME_HEADER.size)
            if header is None:
                return
            msg_type, length = _FRAME_HEADER.unpack(header)
            if length > MAX_FRAME_BYTES:
                self._send(MSG_ERROR, b"frame too large")
                return  # stream cannot be trusted to stay in sync
            payload = _read_exact(self.rfile, length)
            if payload is None:
                return
            if msg_type == MSG_HELLO:
                self._send(MSG_HELLO, encode_hello(db.params, db.K))
            elif msg_type == MSG_QUERY:
                try:
                    query = decode_query(payload, db.params, db.K)
                    if isinstance(query, Query):
                        answer = protocol_rp.answer_query(db, query)
                    else:
                        answer = protocol_csi2.answer_query(db, query)
                except (WireParseError, ProtocolError, ParameterError) as exc:
                    self._send(MSG_ERROR, str(exc).encode("utf-8"))
                else:
                    self._send(MSG_ANSWER, encode_answer(answer))
            else:
                self._send(MSG_ERROR, f"unexpected frame type 0x{msg_type:02x}".encode())

    def _send(self, msg_type: int, payload: bytes):
        self.wfile.write(encode_frame(msg_type, payload))
        self.wfile.flush()


class _TcpServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class PirServer:
    """A database served over TCP.  Use as a context manager in tests:

        with PirServer(db, port=0) as srv:
            fetch(srv.address, query)
    """

    def __init__(self, db: Database, host: str = "127.0.0.1", port: int | None = None):
        if port is None:
            port = default_port()
        self._server = _TcpServer((host, port), _Handler)
        self._server.db = db  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def start(self) -> "PirServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def serve(db: Database, host: str = "127.0.0.1", port: int | None = None):
    """Serve until interrupted (blocking); the CLI wraps this."""
    server = PirServer(db, host, port)
    try:
        server._server.serve_forever()
    finally:
        server._server.server_close()


def _exchange(addr: tuple[str, int], msg_type: int, payload: bytes) -> tuple[int, bytes]:
    with socket.create_connection(addr, timeout=10) as sock:
        sock.sendall(encode_frame(msg_type, payload))
        rfile = sock.makefile("rb")
        header = _read_exact(rfile, _FRAME_HEADER.size)
        if header is None:
            raise ProtocolError("server closed the connection without replying")
        reply_type, length = _FRAME_HEADER.unpack(header)
        body = _read_exact(rfile, length)
        if body is None:
            raise ProtocolError("server reply was cut short")
        return reply_type, body


def hello(addr: tuple[str, int]) -> tuple[FieldParams, int]:
    """Ask a server for its field parameters and message count."""
    reply_type, body = _exchange(addr, MSG_HELLO, b"")
    if reply_type != MSG_HELLO:
        raise ProtocolError(f"expected a hello reply, got type 0x{reply_type:02x}")
    return decode_hello(body)


def fetch(addr: tuple[str, int], query, params: FieldParams | None = None) -> Answer:
    """Send one query and return the decoded answer.  When params is omitted
    the server is asked for them first."""
    if params is None:
        params, _ = hello(addr)
    reply_type, body = _exchange(addr, MSG_QUERY, encode_query(query, params))
    if reply_type == MSG_ERROR:
        raise ProtocolError(f"server rejected the query: {body.decode('utf-8', 'replace')}")
    if reply_type != MSG_ANSWER:
        raise ProtocolError(f"expected an answer, got type 0x{reply_type:02x}")
    return decode_answer(body, params)
