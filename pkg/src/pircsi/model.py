"""Problem setup: the message database and the client's side information.

A database holds K field elements X_1..X_K (indices are 1-based throughout).
A scenario fixes the client's state: the demand index W, the support S of the
side information, the nonzero coefficients C aligned with sorted(S), and the
coded side information Y = sum(c_i * X_i).  Model "I" demands a message from
outside S; model "II" demands one from inside S.
"""

import struct
from dataclasses import dataclass
from random import Random

from .errors import ParameterError
from .field import FieldElement, FieldParams, sample_coefficient

MODEL_I = "I"
MODEL_II = "II"

_DB_HEADER = struct.Struct("<III")  # q, m, K


class Database:
    """K messages over a fixed field.  Immutable once constructed."""

    __slots__ = ("params", "messages")

    def __init__(self, params: FieldParams, messages):
        messages = tuple(messages)
        if not messages:
            raise ParameterError("a database holds at least one message")
        for x in messages:
            if not isinstance(x, FieldElement) or x.params != params:
                raise ParameterError("all messages must be elements of the given field")
        self.params = params
        self.messages = messages

    @property
    def K(self) -> int:
        return len(self.messages)

    def __getitem__(self, index: int) -> FieldElement:
        """Message X_index, 1-based."""
        if not 1 <= index <= self.K:
            raise ParameterError(f"index {index} outside [1, {self.K}]")
        return self.messages[index - 1]

    def __eq__(self, other):
        return (
            isinstance(other, Database)
            and self.params == other.params
            and self.messages == other.messages
        )

    @classmethod
    def random(cls, params: FieldParams, K: int, rng: Random) -> "Database":
        if K < 1:
            raise ParameterError(f"K must be positive, got {K}")
        return cls(params, tuple(params.sample(rng) for _ in range(K)))

    # -- binary file format --------------------------------------------------
    # header: q, m, K as u32 little-endian, then K canonical element encodings.

    def to_bytes(self) -> bytes:
        parts = [_DB_HEADER.pack(self.params.q, self.params.m, self.K)]
        parts.extend(x.to_bytes() for x in self.messages)
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Database":
        if len(data) < _DB_HEADER.size:
            raise ParameterError("database blob shorter than its header")
        q, m, K = _DB_HEADER.unpack_from(data, 0)
        params = FieldParams(q, m)
        step = params.element_bytes
        expect = _DB_HEADER.size + K * step
        if len(data) != expect:
            raise ParameterError(f"database blob has {len(data)} bytes, expected {expect}")
        messages = []
        for i in range(K):
            off = _DB_HEADER.size + i * step
            messages.append(params.from_bytes(data[off : off + step]))
        return cls(params, tuple(messages))

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Database":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


@dataclass(frozen=True)
class Scenario:
    """One client state: demand W, support S (sorted), coefficients C, and Y."""

    W: int
    S: tuple[int, ...]
    C: tuple[int, ...]
    Y: FieldElement
    model: str

    def coeff_of(self, index: int) -> int:
        """Side-information coefficient attached to a support index."""
        try:
            return self.C[self.S.index(index)]
        except ValueError:
            raise ParameterError(f"index {index} is not in the support") from None


def indicator(W: int, S) -> int:
    """1 when the demand lies inside the side-information support, else 0."""
    return 1 if W in set(S) else 0


def side_information(db: Database, S, C) -> FieldElement:
    """Evaluate sum(c_i * X_i) over the support.  Empty support gives zero."""
    S = tuple(S)
    C = tuple(C)
    if len(S) != len(C):
        raise ParameterError(f"support size {len(S)} != coefficient count {len(C)}")
    if len(set(S)) != len(S):
        raise ParameterError("support indices must be distinct")
    q = db.params.q
    total = db.params.zero()
    for i, c in zip(S, C):
        if not 1 <= i <= db.K:
            raise ParameterError(f"support index {i} outside [1, {db.K}]")
        if not isinstance(c, int) or not 1 <= c % q == c:
            raise ParameterError(f"coefficient {c!r} is not a nonzero scalar mod {q}")
        total = total + db[i].scale(c)
    return total


def sample_scenario(db: Database, M: int, model: str, rng: Random) -> Scenario:
    """Draw a uniform scenario: S uniform over M-subsets, C uniform over units,
    W uniform over the complement of S (model I) or over S (model II)."""
    K = db.K
    if model == MODEL_I:
        if not 0 <= M < K:
            raise ParameterError(f"model I needs 0 <= M < K, got M={M}, K={K}")
    elif model == MODEL_II:
        if not 1 <= M <= K:
            raise ParameterError(f"model II needs 1 <= M <= K, got M={M}, K={K}")
    else:
        raise ParameterError(f"unknown model {model!r}")
    S = tuple(sorted(rng.sample(range(1, K + 1), M)))
    C = tuple(sample_coefficient(db.params, rng) for _ in range(M))
    if model == MODEL_I:
        outside = [i for i in range(1, K + 1) if i not in set(S)]
        W = outside[rng.randrange(len(outside))]
    else:
        W = S[rng.randrange(M)]
    Y = side_information(db, S, C)
    return Scenario(W=W, S=S, C=C, Y=Y, model=model)
