"""Retrieval protocol for demands inside the side-information support.

The shape of the query depends only on the support size M:

* M == 1: the side information is c_1 * X_W itself, so nothing is sent.
* M == 2 (single-probe case, tag 1): ask for one index, the demand with
  probability 1/K and its support partner otherwise.
* 3 <= M <= K/2 (disjoint case, tag 2): send S without the demand under its
  true coefficients, plus a disjoint cover set of the same size.
* K/2 < M <= K-1 (overlap case, tag 3): send S with a fresh coefficient on
  the demand, plus a cover set holding everything outside S and a few
  repeated support indices.
* M == K (full case, tag 4): send all of [K] with a fresh coefficient on the
  demand.

Each case downloads 0, 1, or 2 elements, matching the second-model capacity.
"""

from dataclasses import dataclass
from random import Random

from .errors import ParameterError, ProtocolError
from .field import FieldElement, sample_coefficient
from .model import MODEL_II, Database, Scenario
from .pmf import case2_pmf, case3_pmf, sample_from_pmf
from .protocol_rp import Answer, DecoderState, QuerySet, _shuffle_within, evaluate_set

CASE_TRIVIAL = 0
CASE_SINGLE = 1
CASE_DISJOINT = 2
CASE_OVERLAP = 3
CASE_FULL = 4

CASE_TAGS = (CASE_TRIVIAL, CASE_SINGLE, CASE_DISJOINT, CASE_OVERLAP, CASE_FULL)


@dataclass(frozen=True)
class Csi2Query:
    """A second-model query: up to two sets plus the case tag that tells the
    decoder (and the wire format) which shape this is."""

    sets: tuple[QuerySet, ...]
    case_tag: int


def case_for(K: int, M: int) -> int:
    """Which query shape a support of size M uses against K messages."""
    if not 1 <= M <= K:
        raise ParameterError(f"need 1 <= M <= K, got M={M}, K={K}")
    if M == 1:
        return CASE_TRIVIAL
    if M == 2:
        return CASE_SINGLE
    if M == K:
        return CASE_FULL
    if 2 * M <= K:
        return CASE_DISJOINT
    return CASE_OVERLAP


def download_cost(K: int, M: int) -> int:
    """Field elements downloaded per retrieval: 0, 1, or 2."""
    case = case_for(K, M)
    if case == CASE_TRIVIAL:
        return 0
    if case in (CASE_SINGLE, CASE_FULL):
        return 1
    return 2


def build_query(
    scenario: Scenario, K: int, rng: Random, *, _shuffle_order: bool = True
) -> tuple[Csi2Query, DecoderState]:
    if scenario.model != MODEL_II:
        raise ParameterError(f"expected a model {MODEL_II} scenario, got {scenario.model!r}")
    M = len(scenario.S)
    if scenario.W not in scenario.S:
        raise ParameterError("demand must lie inside the support")
    if not all(1 <= i <= K for i in scenario.S):
        raise ParameterError("scenario indices exceed the database size")
    case = case_for(K, M)
    params = scenario.Y.params
    W = scenario.W

    if case == CASE_TRIVIAL:
        state = DecoderState(scenario, None, None, case_tag=CASE_TRIVIAL)
        return Csi2Query(sets=(), case_tag=CASE_TRIVIAL), state

    if case == CASE_SINGLE:
        partner = next(i for i in scenario.S if i != W)
        probe = W if rng.randrange(K) == 0 else partner
        c = sample_coefficient(params, rng)
        query = Csi2Query(sets=(QuerySet((probe,), (c,)),), case_tag=CASE_SINGLE)
        state = DecoderState(scenario, 0, c, case_tag=CASE_SINGLE, probe_index=probe)
        return query, state

    outside = [i for i in range(1, K + 1) if i not in set(scenario.S)]
    if case == CASE_DISJOINT:
        r = sample_from_pmf(case2_pmf(K, M), rng)
        if r == M - 2:
            cover = sorted([W] + rng.sample(outside, M - 2))
        else:
            cover = sorted(rng.sample(outside, M - 1))
        keep = tuple(i for i in scenario.S if i != W)
        known = QuerySet(keep, tuple(scenario.coeff_of(i) for i in keep))
        state_coeff = None  # decoder divides by the true coefficient on W
        pair = [known, _fresh(cover, params, rng)]
    elif case == CASE_OVERLAP:
        s = sample_from_pmf(case3_pmf(K, M), rng)
        others = [i for i in scenario.S if i != W]
        if s == 2 * M - K - 1:
            repeats = sorted([W] + rng.sample(others, s))
        else:
            repeats = sorted(rng.sample(others, s))
        c = _fresh_coeff_excluding(params, rng, scenario.coeff_of(W))
        known = QuerySet(
            scenario.S,
            tuple(c if i == W else scenario.coeff_of(i) for i in scenario.S),
        )
        state_coeff = c
        pair = [known, _fresh(sorted(set(repeats) | set(outside)), params, rng)]
    else:  # CASE_FULL
        c = _fresh_coeff_excluding(params, rng, scenario.coeff_of(W))
        known = QuerySet(
            scenario.S,
            tuple(c if i == W else scenario.coeff_of(i) for i in scenario.S),
        )
        query_sets = (_shuffle_within(known, rng),)
        state = DecoderState(scenario, 0, c, case_tag=CASE_FULL)
        return Csi2Query(sets=query_sets, case_tag=CASE_FULL), state

    pair = [_shuffle_within(qs, rng) for qs in pair]
    order = [0, 1]
    if _shuffle_order:
        rng.shuffle(order)
    query = Csi2Query(sets=tuple(pair[i] for i in order), case_tag=case)
    state = DecoderState(scenario, order.index(0), state_coeff, case_tag=case)
    return query, state


def _fresh(indices, params, rng: Random) -> QuerySet:
    return QuerySet(tuple(indices), tuple(sample_coefficient(params, rng) for _ in indices))


def _fresh_coeff_excluding(params, rng: Random, taboo: int) -> int:
    # q >= 3 leaves at least one other nonzero scalar, so this terminates.
    while True:
        c = sample_coefficient(params, rng)
        if c != taboo:
            return c


def answer_query(db: Database, query: Csi2Query) -> Answer:
    """Evaluate a second-model query with the same strictness as the first."""
    if query.case_tag not in CASE_TAGS:
        raise ProtocolError(f"unknown case tag {query.case_tag!r}")
    shapes = {
        CASE_TRIVIAL: (0, None),
        CASE_SINGLE: (1, 1),
        CASE_DISJOINT: (2, None),
        CASE_OVERLAP: (2, None),
        CASE_FULL: (1, db.K),
    }
    n_sets, size = shapes[query.case_tag]
    if len(query.sets) != n_sets:
        raise ProtocolError(
            f"case {query.case_tag} carries {n_sets} sets, got {len(query.sets)}"
        )
    if size is not None and any(len(qs.indices) != size for qs in query.sets):
        raise ProtocolError(f"case {query.case_tag} sets must have size {size}")
    if n_sets == 2 and len(query.sets[0].indices) != len(query.sets[1].indices):
        raise ProtocolError("paired query sets must have equal sizes")
    return Answer(tuple(evaluate_set(db, qs) for qs in query.sets))


def decode_answer(answer: Answer, state: DecoderState) -> FieldElement:
    """Recover X_W; which linear step applies is fixed by the case tag."""
    scenario = state.scenario
    q = scenario.Y.params.q
    case = state.case_tag
    if case == CASE_TRIVIAL:
        return scenario.Y.scale(pow(scenario.coeff_of(scenario.W), -1, q))
    slot = state.demand_slot
    if slot is None or not 0 <= slot < len(answer.values):
        raise ProtocolError(f"demand slot {slot!r} not present in the answer")
    got = answer.values[slot]
    if case == CASE_SINGLE:
        c = state.demand_coeff
        probed = got.scale(pow(c, -1, q))  # X at the probed index
        if state.probe_index == scenario.W:
            return probed
        partner_coeff = scenario.coeff_of(state.probe_index)
        own = pow(scenario.coeff_of(scenario.W), -1, q)
        return (scenario.Y - probed.scale(partner_coeff)).scale(own)
    if case == CASE_DISJOINT:
        own = pow(scenario.coeff_of(scenario.W), -1, q)
        return (scenario.Y - got).scale(own)
    if case in (CASE_OVERLAP, CASE_FULL):
        delta = (state.demand_coeff - scenario.coeff_of(scenario.W)) % q
        return (got - scenario.Y).scale(pow(delta, -1, q))
    raise ProtocolError(f"unknown case tag {case!r}")
