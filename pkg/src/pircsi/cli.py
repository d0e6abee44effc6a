"""Operator front end: demos, audits, sweeps, and the client/server pair.

Every subcommand is deterministic for a fixed flag set and seed, so
transcripts can be diffed across runs and machines.  Exit codes follow the
CI convention: 0 all checks passed, 1 a check failed, 2 bad usage.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from random import Random

from . import __version__, protocol_csi2, protocol_rp, wire
from .audit import (
    DEFAULT_ROW_GUARD,
    MUTATIONS,
    audit_exact,
    audit_montecarlo,
    measure_rate,
)
from .errors import AuditSizeError, ParameterError, ProtocolError
from .field import FieldParams
from .model import MODEL_I, MODEL_II, Database, sample_scenario
from .pmf import case2_pmf, case3_pmf, partition_rounds, rp_distribution

_CASE_NAMES = {
    protocol_csi2.CASE_TRIVIAL: "no-query",
    protocol_csi2.CASE_SINGLE: "single-probe",
    protocol_csi2.CASE_DISJOINT: "disjoint-cover",
    protocol_csi2.CASE_OVERLAP: "overlap-cover",
    protocol_csi2.CASE_FULL: "full-support",
}


@dataclass(frozen=True)
class RunConfig:
    """Validated knob set shared by the protocol-driving subcommands."""

    model: str
    K: int
    M: int
    q: int
    ext: int
    seed: int
    trials: int
    output: str | None


def _config_from(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        model=getattr(args, "model", MODEL_I),
        K=getattr(args, "k", 0),
        M=getattr(args, "m", 0),
        q=getattr(args, "q", 3),
        ext=getattr(args, "ext", 1),
        seed=getattr(args, "seed", 0),
        trials=getattr(args, "trials", 0),
        output=getattr(args, "out", None),
    )


def _rat(value) -> str:
    # Fraction formats as "a/b" or "a"; the query-free cell has infinite rate.
    return "inf" if value == float("inf") else str(Fraction(value))


def _rat_pair(value: Fraction) -> dict:
    return {"num": str(value.numerator), "den": str(value.denominator)}


def _format_element(value) -> str:
    if value.params.m == 1:
        return str(value.coeffs[0])
    terms = []
    for power in range(value.params.m - 1, -1, -1):
        c = value.coeffs[power]
        if c == 0:
            continue
        if power == 0:
            terms.append(str(c))
        else:
            x = "x" if power == 1 else f"x^{power}"
            terms.append(x if c == 1 else f"{c}{x}")
    return "+".join(terms) if terms else "0"


@contextmanager
def _open_out(path: str | None):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit_json(payload: dict, path: str | None) -> None:
    with _open_out(path) as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------- transcripts


def _print_scenario(scenario, fh) -> None:
    coeffs = " ".join(f"c_{i}={c}" for i, c in zip(scenario.S, scenario.C))
    support = "{" + ",".join(str(i) for i in scenario.S) + "}"
    print(
        f"scenario: demand W={scenario.W}, support S={support}, "
        f"coefficients {coeffs}, side information Y={_format_element(scenario.Y)}",
        file=fh,
    )


def _print_query(query, fh) -> None:
    if not query.sets:
        print("query: none (the side information alone yields the demand)", file=fh)
        return
    label = ""
    if hasattr(query, "case_tag"):
        label = f"{_CASE_NAMES[query.case_tag]}, "
    print(f"query ({label}{len(query.sets)} set{'s' if len(query.sets) != 1 else ''}):", file=fh)
    for pos, qs in enumerate(query.sets, start=1):
        combo = " + ".join(f"{c}*X_{i}" for i, c in zip(qs.indices, qs.coeffs))
        print(f"  set {pos}: {combo}", file=fh)


def _print_reveal(state, fh) -> None:
    if state.case_tag == protocol_csi2.CASE_TRIVIAL:
        print("reveal: nothing sent, nothing to hide", file=fh)
    elif state.case_tag == protocol_csi2.CASE_SINGLE:
        hit = "the demand itself" if state.probe_index == state.scenario.W else "its partner in S"
        print(f"reveal: probe covers index {state.probe_index} ({hit})", file=fh)
    else:
        print(
            f"reveal: decoding uses slot {state.demand_slot + 1}"
            + (f", fresh coefficient {state.demand_coeff}" if state.demand_coeff is not None else ""),
            file=fh,
        )


def _run_round(db: Database, scenario, K: int, rng: Random):
    if scenario.model == MODEL_I:
        query, state = protocol_rp.build_query(scenario, K, rng)
        answer = protocol_rp.answer_query(db, query)
    else:
        query, state = protocol_csi2.build_query(scenario, K, rng)
        answer = protocol_csi2.answer_query(db, query)
    return query, state, answer


def _decode(answer, state):
    if state.scenario.model == MODEL_I:
        return protocol_rp.decode_answer(answer, state)
    return protocol_csi2.decode_answer(answer, state)


def _cmd_demo(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    params = FieldParams(cfg.q, cfg.ext)
    rng = Random(cfg.seed)
    db = Database.random(params, cfg.K, rng)
    scenario = sample_scenario(db, cfg.M, cfg.model, rng)
    query, state, answer = _run_round(db, scenario, cfg.K, rng)
    decoded = _decode(answer, state)

    fh = sys.stdout
    print(
        f"model {cfg.model}  K={cfg.K}  M={cfg.M}  field GF({cfg.q}^{cfg.ext})  seed={cfg.seed}",
        file=fh,
    )
    print("database:", file=fh)
    for i in range(1, db.K + 1):
        print(f"  X_{i} = {_format_element(db[i])}", file=fh)
    _print_scenario(scenario, fh)
    _print_query(query, fh)
    count = len(answer.values)
    print(f"answer: {count} element{'s' if count != 1 else ''}", file=fh)
    for pos, value in enumerate(answer.values, start=1):
        print(f"  A_{pos} = {_format_element(value)}", file=fh)
    if args.reveal:
        _print_reveal(state, fh)
    print(f"decoded  X_{scenario.W} = {_format_element(decoded)}", file=fh)
    print(f"database X_{scenario.W} = {_format_element(db[scenario.W])}", file=fh)
    ok = decoded == db[scenario.W]
    print(f"result: {'PASS' if ok else 'FAIL'}", file=fh)
    return 0 if ok else 1


# --------------------------------------------------------------------- audits


def _fingerprint_json(report) -> list:
    rows = []
    for fp in sorted(report.posteriors):
        rows.append(
            {
                "sets": [list(s) for s in fp],
                "probability": _rat(report.fingerprint_probs[fp]),
                "posterior": [_rat(p) for p in report.posteriors[fp]],
            }
        )
    return rows


def _cmd_audit(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    if args.exact:
        try:
            report = audit_exact(cfg.model, cfg.K, cfg.M, row_guard=args.row_guard)
        except AuditSizeError as exc:
            raise AuditSizeError(f"{exc}; rerun with --mc for a statistical audit") from None
        payload = {
            "mode": "exact",
            "model": report.model,
            "K": report.K,
            "M": report.M,
            "uniform": report.uniform,
            "worst_deviation": _rat(report.worst_deviation),
            "fingerprints": _fingerprint_json(report),
        }
        _emit_json(payload, cfg.output)
        return 0 if report.uniform else 1
    if args.mc:
        params = FieldParams(cfg.q, cfg.ext)
        report = audit_montecarlo(
            cfg.model,
            cfg.K,
            cfg.M,
            cfg.trials,
            Random(cfg.seed),
            params=params,
            mutation=args.mutation,
            significance=args.significance,
        )
        payload = {
            "mode": "mc",
            "model": report.model,
            "K": report.K,
            "M": report.M,
            "q": cfg.q,
            "ext": cfg.ext,
            "seed": cfg.seed,
            "trials": report.trials,
            "mutation": report.mutation,
            "significance": report.significance,
            "tests": report.tests,
            "skipped_bins": report.skipped_bins,
            "min_p": report.min_p,
            "passed": report.passed,
        }
        _emit_json(payload, cfg.output)
        return 0 if report.passed else 1
    params = FieldParams(cfg.q, cfg.ext)
    report = measure_rate(cfg.model, cfg.K, cfg.M, params=params, seed=cfg.seed)
    payload = {
        "mode": "rate",
        "model": report.model,
        "K": report.K,
        "M": report.M,
        "q": cfg.q,
        "ext": cfg.ext,
        "seed": cfg.seed,
        "elements_downloaded": report.elements_downloaded,
        "measured_rate": _rat(report.measured_rate),
        "capacity": _rat(report.capacity),
        "matches_capacity": report.matches_capacity,
    }
    _emit_json(payload, cfg.output)
    return 0 if report.matches_capacity else 1


def _cmd_sweep(args: argparse.Namespace) -> int:
    ok = True
    with _open_out(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["model", "K", "M", "elements_downloaded", "measured_rate", "capacity", "equal"]
        )
        for K in range(args.k_min, args.k_max + 1):
            m_values = range(0, K) if args.model == MODEL_I else range(1, K + 1)
            for M in m_values:
                rep = measure_rate(args.model, K, M, seed=args.seed)
                ok = ok and rep.matches_capacity
                writer.writerow(
                    [
                        rep.model,
                        rep.K,
                        rep.M,
                        rep.elements_downloaded,
                        _rat(rep.measured_rate),
                        _rat(rep.capacity),
                        "true" if rep.matches_capacity else "false",
                    ]
                )
    return 0 if ok else 1


# ----------------------------------------------------------------------- pmf


def _cmd_pmf_dump(args: argparse.Namespace) -> int:
    K, M = args.k, args.m
    if args.dist == "classes":
        dist = rp_distribution(K, M)
        n, l = partition_rounds(K, M)
        payload = {
            "distribution": "classes",
            "K": K,
            "M": M,
            "rounds": n,
            "duplicates": l,
            "normalizer": _rat_pair(dist.P),
            "support": [
                {"s": s, "r": r, "p": _rat_pair(p)} for (s, r), p in sorted(dist.table.items())
            ],
        }
    elif args.dist == "disjoint":
        table = case2_pmf(K, M)
        payload = {
            "distribution": "disjoint",
            "K": K,
            "M": M,
            "support": [{"r": r, "p": _rat_pair(p)} for r, p in sorted(table.items())],
        }
    else:
        table = case3_pmf(K, M)
        payload = {
            "distribution": "overlap",
            "K": K,
            "M": M,
            "support": [{"s": s, "p": _rat_pair(p)} for s, p in sorted(table.items())],
        }
    _emit_json(payload, args.out)
    return 0


# ------------------------------------------------------------------- network


def _cmd_serve(args: argparse.Namespace) -> int:
    db = Database.load(args.db)
    port = args.port if args.port is not None else wire.default_port()
    print(
        f"serving K={db.K} messages over GF({db.params.q}^{db.params.m}) "
        f"on {args.host}:{port}",
        file=sys.stderr,
        flush=True,
    )
    try:
        wire.serve(db, args.host, port)
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_fetch(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    # The database file stands in for however the client came by its side
    # information; query bytes depend only on (W, S, C) and the seed.
    db = Database.load(args.db)
    host, port = args.addr
    remote_params, remote_k = wire.hello((host, port))
    if remote_params != db.params or remote_k != db.K:
        print("error: server database does not match the local copy", file=sys.stderr)
        return 2
    rng = Random(cfg.seed)
    scenario = sample_scenario(db, cfg.M, cfg.model, rng)
    if scenario.model == MODEL_I:
        query, state = protocol_rp.build_query(scenario, db.K, rng)
    else:
        query, state = protocol_csi2.build_query(scenario, db.K, rng)
    answer = wire.fetch((host, port), query, db.params)
    decoded = _decode(answer, state)

    fh = sys.stdout
    print(f"server {host}:{port}  GF({db.params.q}^{db.params.m})  K={db.K}", file=fh)
    _print_scenario(scenario, fh)
    _print_query(query, fh)
    count = len(answer.values)
    print(f"answer: {count} element{'s' if count != 1 else ''}", file=fh)
    for pos, value in enumerate(answer.values, start=1):
        print(f"  A_{pos} = {_format_element(value)}", file=fh)
    if args.reveal:
        _print_reveal(state, fh)
    print(f"decoded  X_{scenario.W} = {_format_element(decoded)}", file=fh)
    ok = decoded == db[scenario.W]
    print(f"result: {'PASS' if ok else 'FAIL'}", file=fh)
    return 0 if ok else 1


def _cmd_db_gen(args: argparse.Namespace) -> int:
    params = FieldParams(args.q, args.ext)
    db = Database.random(params, args.k, Random(args.seed))
    db.save(args.out)
    size = len(db.to_bytes())
    print(f"wrote {args.out}: K={args.k} messages over GF({args.q}^{args.ext}), {size} bytes")
    return 0


# -------------------------------------------------------------------- parser


def _addr(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def _add_field_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--q", type=int, default=3, help="base-field characteristic (default 3)")
    sub.add_argument("--ext", type=int, default=1, help="extension degree (default 1)")


def _add_cell_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--model", choices=(MODEL_I, MODEL_II), required=True)
    sub.add_argument("--k", type=int, required=True, help="number of database messages")
    sub.add_argument("--m", type=int, required=True, help="side-information support size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pircsi",
        description="Private information retrieval with coded side information.",
    )
    parser.add_argument("--version", action="version", version=f"pircsi {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    demo = commands.add_parser("demo", help="run one protocol round end to end, locally")
    _add_cell_flags(demo)
    _add_field_flags(demo)
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument(
        "--reveal",
        action="store_true",
        help="annotate which query set decodes the demand (off by default; the "
        "plain transcript shows exactly what the server sees)",
    )
    demo.set_defaults(func=_cmd_demo)

    audit = commands.add_parser("audit", help="privacy and rate checks, exact or statistical")
    _add_cell_flags(audit)
    mode = audit.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exact", action="store_true", help="enumerate all query branches")
    mode.add_argument("--mc", action="store_true", help="chi-square screen over sampled queries")
    mode.add_argument("--rate", action="store_true", help="count downloads and compare to capacity")
    _add_field_flags(audit)
    audit.add_argument("--seed", type=int, default=0)
    audit.add_argument("--trials", type=int, default=100_000)
    audit.add_argument("--significance", type=float, default=0.01)
    audit.add_argument("--mutation", choices=sorted(MUTATIONS), default=None)
    audit.add_argument("--row-guard", type=int, default=DEFAULT_ROW_GUARD)
    audit.add_argument("--out", default=None, help="report path (default stdout)")
    audit.set_defaults(func=_cmd_audit)

    sweep = commands.add_parser("sweep", help="rate-vs-capacity table over a K range")
    sweep.add_argument("--model", choices=(MODEL_I, MODEL_II), required=True)
    sweep.add_argument("--k-min", type=int, default=2)
    sweep.add_argument("--k-max", type=int, default=12)
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--out", default=None, help="CSV path (default stdout)")
    sweep.set_defaults(func=_cmd_sweep)

    pmf = commands.add_parser("pmf", help="inspect the query distributions")
    pmf_sub = pmf.add_subparsers(dest="pmf_command", required=True)
    dump = pmf_sub.add_parser("dump", help="emit one distribution as JSON")
    dump.add_argument(
        "--dist",
        choices=("classes", "disjoint", "overlap"),
        required=True,
        help="classes: duplicate-class pmf; disjoint/overlap: cover-size pmfs",
    )
    dump.add_argument("--k", type=int, required=True)
    dump.add_argument("--m", type=int, required=True)
    dump.add_argument("--out", default=None)
    dump.set_defaults(func=_cmd_pmf_dump)

    serve = commands.add_parser("serve", help="answer queries from a database file")
    serve.add_argument("--db", required=True, help="database file from 'db gen'")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument(
        "--port", type=int, default=None, help="default: $PIRCSI_PORT, else 7641"
    )
    serve.set_defaults(func=_cmd_serve)

    fetch = commands.add_parser("fetch", help="retrieve one message from a running server")
    fetch.add_argument("--db", required=True, help="local database copy (source of Y)")
    fetch.add_argument(
        "--addr", type=_addr, default=("127.0.0.1", wire.default_port()), help="HOST:PORT"
    )
    fetch.add_argument("--model", choices=(MODEL_I, MODEL_II), required=True)
    fetch.add_argument("--m", type=int, required=True, help="side-information support size")
    fetch.add_argument("--seed", type=int, default=0)
    fetch.add_argument("--reveal", action="store_true")
    fetch.set_defaults(func=_cmd_fetch)

    dbcmd = commands.add_parser("db", help="database file utilities")
    db_sub = dbcmd.add_subparsers(dest="db_command", required=True)
    gen = db_sub.add_parser("gen", help="write a random database file")
    gen.add_argument("--k", type=int, required=True)
    _add_field_flags(gen)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_db_gen)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AuditSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ProtocolError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
