"""Command-line front end: demos, sessions, verification suites, scans.

Exit codes are a stable contract: 0 success, 1 usage error, 2 proven-bound
violation, 3 I/O failure.  Every randomized command requires --seed; no
command ever reads system entropy, so identical flags produce byte-identical
output files.  Text output is human-oriented and unstable; JSON and CSV are
the machine contract.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis, hardening, protocol, qmath
from .analysis import OptimizerConfig
from .encodings import (
    build_family,
    cyclic_family,
    explicit_single_bit_family,
    mub_family,
    random_family,
    tensorized_family,
    walsh_family,
    walsh_matrix,
)
from .protocol import DatabaseState, honest_basis, invert_basis, parity_basis, run_session
from .qmath import SeededRng

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2
EXIT_IO = 3

VERIFY_SUITES = ("entropic", "povm", "concentration", "hk", "honest", "all")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse hook; route to exit code 1
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="obliq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", help="two-item single-bit walkthrough")
    demo.add_argument("--db", default="0", help="database value as hex, item 0 most significant")
    demo.add_argument("--choice", type=int, default=0, help="which item to learn (0 or 1)")
    demo.add_argument("--seed", type=int, required=True)

    sess = sub.add_parser("session", help="run one protocol session, write a JSON transcript")
    sess.add_argument("--k", type=int, default=2)
    sess.add_argument("--m", type=int, default=1)
    sess.add_argument(
        "--family",
        default="explicit",
        choices=("explicit", "walsh", "mub", "cyclic", "random", "tensorized"),
    )
    sess.add_argument("--db", required=True, help="database value as hex")
    sess.add_argument("--choice", type=int, default=0)
    sess.add_argument("--strategy", default="honest", choices=("honest", "invert", "parity"))
    sess.add_argument("--guess", type=int, default=0, help="encoding guess for --strategy invert")
    sess.add_argument("--r", type=int, default=1, help="XOR share-splitting rounds")
    sess.add_argument("--mask", action="store_true", help="apply a random GF(2^m) affine mask")
    sess.add_argument("--tensor-r", type=int, default=2, help="block size for --family tensorized")
    sess.add_argument("--seed", type=int, required=True)
    sess.add_argument("--out", default=None, help="transcript path (default: stdout)")

    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("--suite", required=True)
    ver.add_argument("--trials", type=int, default=None)
    ver.add_argument("--k", type=int, default=2)
    ver.add_argument("--m", type=int, default=1)
    ver.add_argument("--seed", type=int, required=True)
    ver.add_argument("--out", default=None, help="report path (default: stdout)")

    scan = sub.add_parser("scan", help="leakage scan over a (k, m) grid")
    scan.add_argument("--k", default="2..3", help="k range, e.g. 2..4")
    scan.add_argument("--m", default="1..2", help="m range, e.g. 1..2")
    scan.add_argument("--restarts", type=int, default=OptimizerConfig.restarts)
    scan.add_argument("--iters", type=int, default=OptimizerConfig.iterations)
    scan.add_argument("--seed", type=int, required=True)
    scan.add_argument("--out", default=None, help="CSV path (default: stdout)")

    return parser


def _parse_db(text: str, k: int, m: int) -> int:
    try:
        value = int(text, 16)
    except ValueError:
        raise UsageError(f"--db {text!r} is not a hex string")
    if not 0 <= value < 1 << (k * m):
        raise UsageError(f"--db value {text!r} out of range for k={k}, m={m} ({k * m} bits)")
    return value


def _parse_range(text: str) -> list:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected like 2..4")


def _make_family(args, rng: SeededRng):
    kind, k, m = args.family, args.k, args.m
    if kind == "explicit":
        if (k, m) != (2, 1):
            raise UsageError("--family explicit requires --k 2 --m 1")
        return explicit_single_bit_family()
    if kind == "walsh":
        if k != 2:
            raise UsageError("--family walsh requires --k 2")
        return walsh_family(m)
    try:
        if kind == "mub":
            return build_family(mub_family(k, m))
        if kind == "cyclic":
            return build_family(cyclic_family(k, m))
        if kind == "random":
            return build_family(random_family(k, m, rng))
        if kind == "tensorized":
            return build_family(tensorized_family(k, m, args.tensor_r, rng))
    except ValueError as exc:
        raise UsageError(str(exc))
    raise UsageError(f"unknown family {kind!r}")


def _strategy(args, family):
    if args.strategy == "honest":
        if not 0 <= args.choice < family.k:
            raise UsageError(f"--choice {args.choice} out of range for k={family.k}")
        return honest_basis(family, args.choice)
    if args.strategy == "invert":
        if not 0 <= args.guess < family.k:
            raise UsageError(f"--guess {args.guess} out of range for k={family.k}")
        return invert_basis(family, args.guess)
    if family.k != 2 or family.m != 1:
        raise UsageError("--strategy parity requires k=2, m=1")
    return parity_basis()


def _write_output(text: str, path: str | None) -> int:
    if path is None:
        sys.stdout.write(text)
        return EXIT_OK
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


# ---------------------------------------------------------------------------
# commands


def _amplitude(z: complex) -> str:
    if abs(z.imag) < 1e-12:
        return f"{z.real:+.4f}"
    return f"({z.real:+.4f}{z.imag:+.4f}i)"


def cmd_demo(args) -> int:
    db_value = _parse_db(args.db, 2, 1)
    if args.choice not in (0, 1):
        raise UsageError(f"--choice must be 0 or 1, got {args.choice}")
    family = explicit_single_bit_family()
    db = DatabaseState.from_index(db_value, 2, 1)
    kets = ["|00>", "|01>", "|10>", "|11>"]

    print("Two items, one bit each; the vendor encodes with E_0 or E_1.")
    print("Encoded states (columns of the encoders):")
    for i in range(2):
        print(f"  encoding {i}:")
        for d in range(4):
            state = protocol.vendor_encode(DatabaseState.from_index(d, 2, 1), family, i)
            terms = "  ".join(f"{_amplitude(a)} {kets[idx]}" for idx, a in enumerate(state) if abs(a) > 1e-12)
            print(f"    db={d:02b}:  {terms}")

    print(f"\nDatabase is {db.items[0]}{db.items[1]}; honest measurement outcomes by choice:")
    for j in range(2):
        basis = honest_basis(family, j)
        print(f"  choice {j} (measure in basis {j}):")
        for i in range(2):
            state = protocol.vendor_encode(db, family, i)
            dist = protocol.outcome_distribution(state, basis)
            outs = ", ".join(f"{idx:02b} w.p. {p:.2f}" for idx, p in enumerate(dist) if p > 1e-12)
            decoded = {protocol.decode_item(idx, i, j, 2, 1) for idx, p in enumerate(dist) if p > 1e-12}
            print(f"    encoding {i}: outcomes {outs}; all decode item {j} = {decoded.pop()}")

    rng = SeededRng(args.seed)
    transcript = run_session(db, family, honest_basis(family, args.choice), rng)
    print(f"\nSeeded session (seed {args.seed}): outcome {transcript.outcome:02b}, "
          f"announced encoding {transcript.announced}, decoded {transcript.decoded}")
    expected = db.items[args.choice]
    if transcript.decoded["value"] != expected:
        print("error: decoded value disagrees with the database", file=sys.stderr)
        return EXIT_VIOLATION
    print(f"Decoded item {args.choice} = {expected}, matching the database.")
    return EXIT_OK


def cmd_session(args) -> int:
    if args.k < 2 or args.m < 1:
        raise UsageError("need --k >= 2 and --m >= 1")
    if args.k * args.m > 12:
        raise UsageError(f"k*m = {args.k * args.m} exceeds the desk-scale cap of 12")
    rng = SeededRng(args.seed)
    family = _make_family(args, rng.derive(0))
    db_value = _parse_db(args.db, args.k, args.m)
    db = DatabaseState.from_index(db_value, args.k, args.m)
    strategy = _strategy(args, family)

    mask = None
    if args.mask:
        if args.k != 2:
            raise UsageError("--mask requires --k 2")
        gen = rng.derive(2).gen
        mask = hardening.GfMask(
            args.m, int(gen.integers(1, 1 << args.m)), int(gen.integers(1 << args.m))
        )

    if args.r < 1:
        raise UsageError("--r must be >= 1")
    if args.r == 1:
        if mask is None:
            transcript = run_session(db, family, strategy, rng.derive(1))
        else:
            transcript = hardening.masked_session(db, family, mask, strategy, rng.derive(1))
        payload = json.dumps(transcript.to_dict(), indent=2) + "\n"
        return _write_output(payload, args.out)

    # share-split rounds: each round is an independent session on one pair
    if args.k != 2:
        raise UsageError("--r > 1 (share splitting) requires --k 2")
    shares = hardening.xor_split(db.items[0], db.items[1], args.r, args.m, rng.derive(3))
    rounds = []
    decoded_parts = []
    for t, (s0, s1) in enumerate(shares.pairs):
        round_db = DatabaseState(2, args.m, (s0, s1))
        if mask is None:
            tr = run_session(round_db, family, strategy, rng.derive(4 + t))
        else:
            tr = hardening.masked_session(round_db, family, mask, strategy, rng.derive(4 + t))
        rounds.append(tr.to_dict())
        decoded_parts.append(tr.decoded)
    decoded = None
    if args.strategy == "honest":
        acc = 0
        for part in decoded_parts:
            acc ^= part["value"]
        decoded = {"kind": "item", "index": args.choice, "value": acc}
    doc = {
        "version": protocol.TRANSCRIPT_VERSION,
        "k": args.k,
        "m": args.m,
        "xor_rounds": args.r,
        "rounds": rounds,
        "decoded": decoded,
        "seed": [rng.seed, rng.stream],
    }
    return _write_output(json.dumps(doc, indent=2) + "\n", args.out)


def _verify_one(suite: str, args, rng: SeededRng):
    reports = []
    if suite == "entropic":
        trials = args.trials or 100_000
        for idx, dim in enumerate((2, 4, 8)):
            reports.append(analysis.verify_theorem1(dim, trials, rng.derive(idx)))
    elif suite == "povm":
        trials = args.trials or 200
        family = build_family(mub_family(2, args.m)) if args.m > 1 else explicit_single_bit_family()
        reports.append(analysis.povm_gain_audit(family, trials, rng.derive(0)))
    elif suite == "concentration":
        trials = args.trials or 1000
        for idx, ell in enumerate((16, 64, 256)):
            reports.append(analysis.concentration_experiment(ell, trials, None, rng.derive(idx)))
    elif suite == "hk":
        trials = args.trials or 20_000
        if args.k == 2:
            # the proven pair: the identity and a flat unitary on the joint space
            encs = [np.eye(1 << (2 * args.m)), walsh_matrix(2 * args.m)]
        else:
            family = build_family(mub_family(args.k, args.m))
            encs = [qmath.kron_chain(family.factors(i)) for i in range(family.k)]
        reports.append(analysis.explore_condition_2prime(encs, trials, rng.derive(0)))
    elif suite == "honest":
        reports.append(_honest_suite(rng))
    else:
        raise UsageError(f"unknown suite {suite!r}; choose from {VERIFY_SUITES}")
    return reports


def _honest_suite(rng: SeededRng) -> analysis.BoundReport:
    """Exhaustive decode correctness plus unbiased-family honest privacy."""
    violations = 0
    checked = 0
    grids = [(2, 1, "explicit"), (2, 2, "walsh"), (3, 1, "mub"), (3, 2, "mub")]
    for k, m, kind in grids:
        if kind == "explicit":
            family = explicit_single_bit_family()
        elif kind == "walsh":
            family = walsh_family(m)
        else:
            family = build_family(mub_family(k, m))
        violations += _completeness_violations(family)
        checked += 1
    leak_worst = 0.0
    for m in (1, 2, 3):
        for k in range(2, (1 << m) + 2):
            family = build_family(mub_family(k, m))
            for j in range(k):
                leak = abs(protocol.honest_leakage(family, j))
                leak_worst = max(leak_worst, leak)
                if leak > 1e-9:
                    violations += 1
    return analysis.BoundReport(
        suite="honest",
        trials=checked,
        min_slack=-leak_worst,
        violations=violations,
        parameters={"worst_abs_leakage_bits": leak_worst},
    )


def _completeness_violations(family) -> int:
    bad = 0
    n, k, m = family.n, family.k, family.m
    for j in range(k):
        basis = honest_basis(family, j)
        mat = basis.matrix
        for i in range(k):
            probs = np.abs(mat @ family.encoder(i)) ** 2
            decoded = np.array([protocol.decode_item(o, i, j, k, m) for o in range(n)])
            items_j = np.array([protocol.item_blocks(d, k, m)[j] for d in range(n)])
            support = probs > 1e-18
            ok = decoded[:, None] == items_j[None, :]
            bad += int(np.logical_and(support, ~ok).sum())
    return bad


def cmd_verify(args) -> int:
    if args.suite not in VERIFY_SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {VERIFY_SUITES}")
    rng = SeededRng(args.seed)
    suites = [s for s in VERIFY_SUITES if s != "all"] if args.suite == "all" else [args.suite]
    reports = []
    for idx, suite in enumerate(suites):
        reports.extend(_verify_one(suite, args, rng.derive(idx)))
    payload = json.dumps([r.to_dict() for r in reports], indent=2) + "\n"
    code = _write_output(payload, args.out)
    if code != EXIT_OK:
        return code
    total = sum(r.violations for r in reports)
    return EXIT_VIOLATION if total > 0 else EXIT_OK


def cmd_scan(args) -> int:
    k_values = _parse_range(args.k)
    m_values = _parse_range(args.m)
    for k in k_values:
        for m in m_values:
            if k * m > 12:
                raise UsageError(f"grid cell (k={k}, m={m}) exceeds the desk-scale cap km <= 12")
    config = OptimizerConfig(restarts=args.restarts, iterations=args.iters)
    rng = SeededRng(args.seed)
    results, fit = analysis.leakage_scan(k_values, m_values, config, rng)
    return _write_output(analysis.scan_csv(results, fit), args.out)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "demo":
            return cmd_demo(args)
        if args.command == "session":
            return cmd_session(args)
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "scan":
            return cmd_scan(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
