"""Private information retrieval with coded side information.

A client who caches one random linear combination of M database messages can
retrieve another message from a single server without revealing which one it
wants.  This package implements the two retrieval protocols (demand outside
or inside the cached combination's support), the exact distributions that
make them private, auditors that verify privacy and recoverability, and a
small wire protocol plus CLI for running the whole thing end to end.
"""

from .errors import AuditSizeError, ParameterError, ProtocolError, WireParseError
from .field import FieldElement, FieldParams, sample_coefficient, smallest_irreducible
from .model import (
    MODEL_I,
    MODEL_II,
    Database,
    Scenario,
    indicator,
    sample_scenario,
    side_information,
)
from .pmf import (
    IdentityReport,
    RpDistribution,
    capacity,
    case2_pmf,
    case3_pmf,
    check_class_weight_identities,
    class_weight,
    partition_prob,
    partition_rounds,
    rp_distribution,
    sample_from_pmf,
)
from .protocol_rp import (
    Answer,
    DecoderState,
    Query,
    QuerySet,
    canonical_fingerprint,
    ordered_fingerprint,
)
from .protocol_csi2 import (
    CASE_DISJOINT,
    CASE_FULL,
    CASE_OVERLAP,
    CASE_SINGLE,
    CASE_TRIVIAL,
    Csi2Query,
    case_for,
    download_cost,
)
from .audit import (
    MUTATIONS,
    MonteCarloReport,
    PosteriorReport,
    RateReport,
    RecoverabilityReport,
    audit_exact,
    audit_montecarlo,
    audit_recoverability,
    measure_rate,
)
from . import protocol_csi2, protocol_rp, wire

__version__ = "0.1.0"

__all__ = [
    "AuditSizeError",
    "Answer",
    "CASE_DISJOINT",
    "CASE_FULL",
    "CASE_OVERLAP",
    "CASE_SINGLE",
    "CASE_TRIVIAL",
    "Csi2Query",
    "Database",
    "DecoderState",
    "FieldElement",
    "FieldParams",
    "IdentityReport",
    "MODEL_I",
    "MODEL_II",
    "MUTATIONS",
    "MonteCarloReport",
    "ParameterError",
    "PosteriorReport",
    "ProtocolError",
    "Query",
    "QuerySet",
    "RateReport",
    "RecoverabilityReport",
    "RpDistribution",
    "Scenario",
    "WireParseError",
    "audit_exact",
    "audit_montecarlo",
    "audit_recoverability",
    "canonical_fingerprint",
    "capacity",
    "case2_pmf",
    "case3_pmf",
    "case_for",
    "check_class_weight_identities",
    "class_weight",
    "download_cost",
    "indicator",
    "measure_rate",
    "ordered_fingerprint",
    "partition_prob",
    "partition_rounds",
    "protocol_csi2",
    "protocol_rp",
    "rp_distribution",
    "sample_coefficient",
    "sample_from_pmf",
    "sample_scenario",
    "side_information",
    "smallest_irreducible",
    "wire",
]
