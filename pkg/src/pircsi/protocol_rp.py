"""Retrieval protocol for demands outside the side-information support.

The client sends n = ceil(K/(M+1)) index sets of size M+1 with fresh nonzero
coefficients.  The sets cover the whole database; l = (M+1)n - K indices
appear in exactly two sets ("repeats"), everything else in exactly one.  One
set is the demand set {W} on S; which indices repeat is drawn from the
duplicate-class pmf so that every candidate demand explains the transmitted
query equally well.  The server returns one field element per set, and the
client strips Y off the demand set's element.
"""

from dataclasses import dataclass
from random import Random

from .errors import ParameterError, ProtocolError
from .field import FieldElement, sample_coefficient
from .model import MODEL_I, Database, Scenario
from .pmf import rp_distribution, sample_from_pmf


@dataclass(frozen=True)
class QuerySet:
    """One transmitted set: parallel tuples of 1-based indices and nonzero
    base-field coefficients."""

    indices: tuple[int, ...]
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.indices) != len(self.coeffs):
            raise ParameterError("indices and coefficients must pair up")


@dataclass(frozen=True)
class Query:
    """A full first-model query plus the metadata the wire format carries."""

    sets: tuple[QuerySet, ...]
    K: int
    M: int
    model: str = MODEL_I


@dataclass(frozen=True)
class Answer:
    """Server response: one field element per query set, in query-set order."""

    values: tuple[FieldElement, ...]


@dataclass(frozen=True)
class DecoderState:
    """Client-side secrets needed to decode: where the demand set landed after
    shuffling and which fresh coefficient was attached to the demand.

    The second-model cases reuse this type; case_tag mirrors the query's case
    and probe_index records the single probed index for the one-element case.
    """

    scenario: Scenario
    demand_slot: int | None
    demand_coeff: int | None
    case_tag: int | None = None
    probe_index: int | None = None


def build_query(
    scenario: Scenario,
    K: int,
    rng: Random,
    *,
    _shuffle_order: bool = True,
    _deterministic_extras: bool = False,
    _class_pmf: dict | None = None,
) -> tuple[Query, DecoderState]:
    """Build one query for the given scenario.

    The underscored keywords deliberately break the construction and exist
    only so the auditors can show they catch such defects; production callers
    leave them alone.
    """
    if scenario.model != MODEL_I:
        raise ParameterError(f"expected a model {MODEL_I} scenario, got {scenario.model!r}")
    M = len(scenario.S)
    if not 0 <= M < K:
        raise ParameterError(f"need 0 <= M < K, got M={M}, K={K}")
    if scenario.W in scenario.S:
        raise ParameterError("demand must lie outside the support")
    if not all(1 <= i <= K for i in (scenario.W, *scenario.S)):
        raise ParameterError("scenario indices exceed the database size")
    params = scenario.Y.params
    dist = rp_distribution(K, M)
    n, l = dist.n, dist.l
    table = dist.table if _class_pmf is None else _class_pmf

    # Draw a duplicate class; with two sets, classes needing an outside repeat
    # cannot be completed, so those draws are rejected and redrawn.
    while True:
        s, r = sample_from_pmf(table, rng)
        if n != 2 or r == 0:
            break

    support = list(scenario.S)
    outside = [i for i in range(1, K + 1) if i != scenario.W and i not in scenario.S]
    if _deterministic_extras:
        from_support = support[:s]
        shared_outside = outside[:r]
    else:
        from_support = sorted(rng.sample(support, s))
        shared_outside = sorted(rng.sample(outside, r))
    demand_repeats = s + r == l - 1  # W itself takes the remaining repeat slot
    repeats = set(from_support) | set(shared_outside)
    if demand_repeats:
        repeats.add(scenario.W)

    c = sample_coefficient(params, rng)
    sets = [QuerySet((scenario.W, *scenario.S), (c, *scenario.C))]
    pool_all = repeats | set(outside)
    if n >= 2:
        pool = sorted(pool_all - set(shared_outside))
        second = shared_outside + sorted(rng.sample(pool, M + 1 - r))
        sets.append(_cover_set(second, params, rng))
        if n >= 3:
            pool = sorted(pool_all - set(second))
            third = shared_outside + sorted(rng.sample(pool, M + 1 - r))
            sets.append(_cover_set(third, params, rng))
            tail = sorted(pool_all - set(second) - set(third))
            rng.shuffle(tail)
            for i in range(n - 3):
                chunk = tail[i * (M + 1) : (i + 1) * (M + 1)]
                sets.append(_cover_set(chunk, params, rng))

    sets = [_shuffle_within(qs, rng) for qs in sets]
    order = list(range(n))
    if _shuffle_order:
        rng.shuffle(order)
    query = Query(sets=tuple(sets[i] for i in order), K=K, M=M)
    _validate_partition(query, l)
    state = DecoderState(scenario=scenario, demand_slot=order.index(0), demand_coeff=c)
    return query, state


def _cover_set(indices: list[int], params, rng: Random) -> QuerySet:
    coeffs = tuple(sample_coefficient(params, rng) for _ in indices)
    return QuerySet(tuple(indices), coeffs)


def _shuffle_within(qs: QuerySet, rng: Random) -> QuerySet:
    pairs = list(zip(qs.indices, qs.coeffs))
    rng.shuffle(pairs)
    return QuerySet(tuple(i for i, _ in pairs), tuple(c for _, c in pairs))


def _validate_partition(query: Query, l: int) -> None:
    """Construction guard: sizes, coverage, and the exact repeat budget."""
    counts: dict[int, int] = {}
    for qs in query.sets:
        if len(qs.indices) != query.M + 1:
            raise ProtocolError("built a set of the wrong size")
        if len(set(qs.indices)) != len(qs.indices):
            raise ProtocolError("built a set with a repeated index")
        for i in qs.indices:
            counts[i] = counts.get(i, 0) + 1
    if set(counts) != set(range(1, query.K + 1)):
        raise ProtocolError("built sets that do not cover the database")
    if sorted(counts.values()).count(2) != l or any(v > 2 for v in counts.values()):
        raise ProtocolError("built sets with the wrong repeat budget")


def answer_query(db: Database, query: Query) -> Answer:
    """Evaluate each query set against the database.

    Structural faults (bad sizes, out-of-range or repeated indices, zero or
    out-of-range coefficients) are rejected, never guessed around.
    """
    if query.K != db.K:
        raise ProtocolError(f"query addresses {query.K} messages, database has {db.K}")
    if not query.sets:
        raise ProtocolError("a first-model query carries at least one set")
    for qs in query.sets:
        if len(qs.indices) != query.M + 1:
            raise ProtocolError("query set size does not match its metadata")
    return Answer(tuple(evaluate_set(db, qs) for qs in query.sets))


def evaluate_set(db: Database, qs: QuerySet) -> FieldElement:
    """Linear combination sum(c_j * X_{i_j}) for one set, with strict checks."""
    if len(set(qs.indices)) != len(qs.indices):
        raise ProtocolError("repeated index inside a query set")
    q = db.params.q
    total = db.params.zero()
    for i, c in zip(qs.indices, qs.coeffs):
        if not (isinstance(i, int) and 1 <= i <= db.K):
            raise ProtocolError(f"index {i!r} outside [1, {db.K}]")
        if not (isinstance(c, int) and 1 <= c <= q - 1):
            raise ProtocolError(f"coefficient {c!r} is not a nonzero scalar mod {q}")
        total = total + db.messages[i - 1].scale(c)
    return total


def decode_answer(answer: Answer, state: DecoderState) -> FieldElement:
    """Recover X_W = c^(-1) (A_demand - Y) from the demand set's element."""
    slot = state.demand_slot
    if slot is None or not 0 <= slot < len(answer.values):
        raise ProtocolError(f"demand slot {slot!r} not present in the answer")
    c = state.demand_coeff
    q = state.scenario.Y.params.q
    if c is None or not 1 <= c <= q - 1:
        raise ProtocolError(f"demand coefficient {c!r} is not invertible mod {q}")
    return (answer.values[slot] - state.scenario.Y).scale(pow(c, -1, q))


def canonical_fingerprint(query) -> tuple:
    """What the privacy analysis conditions on: the transmitted index sets with
    element order, set order, and coefficients stripped away."""
    return tuple(sorted(tuple(sorted(qs.indices)) for qs in query.sets))


def ordered_fingerprint(query) -> tuple:
    """Index sets with set order preserved (elements still sorted).  The
    Monte-Carlo auditor uses this to catch order-leaking defects."""
    return tuple(tuple(sorted(qs.indices)) for qs in query.sets)
