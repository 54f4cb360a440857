"""Batch experiment harness: seeded trials, JSON/CSV records, re-verification.

A record is a pure function of its config: every trial derives its generator
from the root seed and the trial index, so replaying a config reproduces the
record byte for byte.  Wall-clock timings are reported on stderr only and
never serialised.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, RepetitionBudgetExceeded
from .fq import field_ctx, is_prime
from .fqla import (
    Flag,
    Subspace,
    random_flag,
    random_subspace,
    _DT,
)
from .oracles import (
    AffineComplement,
    FullUnipotentOfFlag,
    ParabolicOfFlag,
    SubspaceVectorOracle,
    make_oracle,
    setwise_stabilizer,
)
from .hsp import (
    AlgoConfig,
    abelian_hsp_linear,
    find_complement,
    find_max_parabolic,
    find_parabolic,
    find_unipotent,
)
from .bounds import adversary_threshold
from .qsim import DEFAULT_DENSE_BUDGET

PROBLEMS = ("parabolic", "max-parabolic", "unipotent", "complement", "abelian", "adversary")

FORMAT_VERSION = 1


@dataclass
class ExperimentConfig:
    problem: str
    p: int = 2
    r: int = 1
    n: int = 2
    params: dict = field(default_factory=dict)
    trials: int = 10
    seed: int = 0
    budget: int = DEFAULT_DENSE_BUDGET
    out: str | None = None
    format: str = "json"

    def validate(self):
        if self.problem not in PROBLEMS:
            raise InvalidConfig("problem", f"must be one of {PROBLEMS}")
        if not is_prime(self.p):
            raise InvalidConfig("p", f"{self.p} is not prime")
        if self.r < 1:
            raise InvalidConfig("r", "must be positive")
        if self.n < 1:
            raise InvalidConfig("n", "must be positive")
        if self.trials < 0:
            raise InvalidConfig("trials", "must be nonnegative")
        if self.format not in ("json", "csv"):
            raise InvalidConfig("format", "must be json or csv")
        q = self.p**self.r
        if self.problem in ("parabolic", "max-parabolic", "unipotent", "complement"):
            if q ** (self.n * self.n) > self.budget:
                raise InvalidConfig("n", f"q^(n^2) = {q**(self.n*self.n)} exceeds budget {self.budget}")
        if self.problem in ("max-parabolic", "adversary"):
            d = self.params.get("d")
            if d is not None and not 0 < int(d) < self.n:
                raise InvalidConfig("params.d", "need 0 < d < n")

    def to_dict(self):
        return {
            "problem": self.problem,
            "p": self.p,
            "r": self.r,
            "n": self.n,
            "params": {k: self.params[k] for k in sorted(self.params)},
            "trials": self.trials,
            "seed": self.seed,
            "budget": self.budget,
        }


@dataclass
class TrialResult:
    index: int
    hidden: str
    recovered: str
    success: bool
    queries: int
    wall_time: float = 0.0  # in-memory only; never serialised

    def to_dict(self):
        return {
            "index": self.index,
            "hidden": self.hidden,
            "recovered": self.recovered,
            "success": self.success,
            "queries": self.queries,
        }


@dataclass
class ExperimentRecord:
    config: ExperimentConfig
    trials: list

    @property
    def aggregate(self):
        total = len(self.trials)
        succ = sum(1 for t in self.trials if t.success)
        return {
            "trials": total,
            "successes": succ,
            "success_rate": (succ / total) if total else None,
            "mean_queries": (sum(t.queries for t in self.trials) / total) if total else None,
        }

    def to_dict(self):
        return {
            "format_version": FORMAT_VERSION,
            "config": self.config.to_dict(),
            "trials": [t.to_dict() for t in self.trials],
            "aggregate": self.aggregate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["index,hidden,recovered,success,queries"]
        for t in self.trials:
            lines.append(f"{t.index},\"{t.hidden}\",\"{t.recovered}\",{int(t.success)},{t.queries}")
        return "\n".join(lines) + "\n"


def _trial_rng(seed, index):
    return np.random.default_rng([seed, index])


def _random_shape(n, rng):
    cuts = [int(b) for b in rng.integers(0, 2, size=n - 1)]
    shape, cur = [], 1
    for c in cuts:
        if c:
            shape.append(cur)
            cur = 1
        else:
            cur += 1
    shape.append(cur)
    return tuple(shape)


def run_trial(config: ExperimentConfig, index: int, trace=None) -> TrialResult:
    ctx = field_ctx(config.p, config.r)
    rng = _trial_rng(config.seed, index)
    cfg = AlgoConfig(dense_budget=config.budget)
    n = config.n
    t0 = time.perf_counter()
    problem = config.problem

    if problem == "adversary":
        d = int(config.params.get("d", 1))
        rep = adversary_threshold(ctx, n, d)
        return TrialResult(
            index,
            hidden="",
            recovered=f"threshold={rep.queries};accountant={rep.accountant}",
            success=rep.outcome in ("exhausted",),
            queries=rep.queries,
            wall_time=time.perf_counter() - t0,
        )

    if problem == "abelian":
        m = int(config.params.get("m", n))
        d = config.params.get("d")
        dim = int(d) if d is not None else int(rng.integers(0, m + 1))
        hidden = random_subspace(ctx, m, dim, rng)
        voracle = SubspaceVectorOracle(hidden)
        try:
            got = abelian_hsp_linear(voracle, rng, cfg, trace)
            recovered, ok = got.encode(), got == hidden
        except RepetitionBudgetExceeded:
            recovered, ok = "", False
        return TrialResult(index, hidden.encode(), recovered, ok, voracle.query_count,
                           time.perf_counter() - t0)

    if problem == "complement":
        v = rng.integers(0, ctx.q, size=n - 1, dtype=np.int64).astype(_DT)
        spec = AffineComplement(ctx, n, v)
        oracle = make_oracle(spec, "right")
        hidden = ",".join(str(int(x)) for x in v)
        try:
            got = find_complement(oracle, rng, cfg, trace)
            recovered = ",".join(str(int(x)) for x in got)
            ok = bool(np.array_equal(got, v))
        except RepetitionBudgetExceeded:
            recovered, ok = "", False
        return TrialResult(index, hidden, recovered, ok, oracle.query_count,
                           time.perf_counter() - t0)

    if problem == "max-parabolic":
        d = config.params.get("d")
        dim = int(d) if d is not None else int(rng.integers(1, n))
        hidden = random_subspace(ctx, n, dim, rng)
        oracle = make_oracle(setwise_stabilizer(hidden), "left")
        try:
            got = find_max_parabolic(oracle, rng, cfg, trace)
            recovered, ok = got.encode(), got == hidden
        except RepetitionBudgetExceeded:
            recovered, ok = "", False
        return TrialResult(index, hidden.encode(), recovered, ok, oracle.query_count,
                           time.perf_counter() - t0)

    if problem == "unipotent":
        hidden = random_flag(ctx, n, (1,) * n, rng)
        oracle = make_oracle(FullUnipotentOfFlag(hidden), "left")
        try:
            got = find_unipotent(oracle, rng, cfg, trace)
            recovered, ok = got.encode(), got == hidden
        except RepetitionBudgetExceeded:
            recovered, ok = "", False
        return TrialResult(index, hidden.encode(), recovered, ok, oracle.query_count,
                           time.perf_counter() - t0)

    # parabolic
    shape = config.params.get("shape")
    shape = tuple(int(s) for s in shape) if shape else _random_shape(n, rng)
    hidden = random_flag(ctx, n, shape, rng)
    oracle = make_oracle(ParabolicOfFlag(hidden), "left")
    try:
        got = find_parabolic(oracle, rng, cfg, trace)
        recovered, ok = got.encode(), got == hidden
    except RepetitionBudgetExceeded:
        recovered, ok = "", False
    return TrialResult(index, hidden.encode(), recovered, ok, oracle.query_count,
                       time.perf_counter() - t0)


def _run_trial_tuple(args):
    config_dict, index = args
    config = ExperimentConfig(**config_dict)
    return run_trial(config, index)


def run(config: ExperimentConfig, workers: int = 1, verbose: bool = False) -> ExperimentRecord:
    config.validate()
    if verbose:
        results = []
        for i in range(config.trials):
            trace = []
            results.append(run_trial(config, i, trace))
            for rec in trace:
                print(
                    f"trace trial={i} stage={rec['stage']} sub_trial={rec['trial']} "
                    f"outcome={rec['outcome']} queries={rec['queries']}",
                    file=sys.stderr,
                )
        record = ExperimentRecord(config, results)
        if config.out:
            text = record.to_json() if config.format == "json" else record.to_csv()
            with open(config.out, "w") as fh:
                fh.write(text)
        return record
    if workers > 1 and config.trials > 1:
        payload = dict(
            problem=config.problem, p=config.p, r=config.r, n=config.n,
            params=config.params, trials=config.trials, seed=config.seed,
            budget=config.budget,
        )
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial_tuple, [(payload, i) for i in range(config.trials)]))
        results.sort(key=lambda t: t.index)
    else:
        results = [run_trial(config, i) for i in range(config.trials)]
    record = ExperimentRecord(config, results)
    if config.out:
        text = record.to_json() if config.format == "json" else record.to_csv()
        with open(config.out, "w") as fh:
            fh.write(text)
    return record


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


def _canonical_reencode(ctx, problem, text):
    if not text:
        return None
    if problem in ("parabolic", "unipotent"):
        return Flag.decode(ctx, text).encode() if text != "flag:" else "flag:"
    if problem in ("max-parabolic", "abelian"):
        return Subspace.decode(ctx, text).encode()
    return text  # complement / adversary: plain strings


def verify_record(record_dict) -> bool:
    """Re-check every claimed success from the serialised record alone."""
    cfgd = record_dict["config"]
    ctx = field_ctx(cfgd["p"], cfgd["r"])
    problem = cfgd["problem"]
    ok = True
    for trial in record_dict["trials"]:
        if not trial["success"]:
            continue
        if problem == "adversary":
            continue
        hidden = _canonical_reencode(ctx, problem, trial["hidden"])
        recovered = _canonical_reencode(ctx, problem, trial["recovered"])
        if hidden is None or recovered is None or hidden != recovered:
            ok = False
    agg = record_dict["aggregate"]
    succ = sum(1 for t in record_dict["trials"] if t["success"])
    if agg["successes"] != succ or agg["trials"] != len(record_dict["trials"]):
        ok = False
    return ok


# ---------------------------------------------------------------------------
# table emission
# ---------------------------------------------------------------------------


def table_rows(record_dicts):
    """Flatten records for trend tables; adversary records emit
    (q, n, d, threshold_N, accountant) rows."""
    rows = []
    for rd in record_dicts:
        cfg = rd["config"]
        q = cfg["p"] ** cfg["r"]
        if cfg["problem"] == "adversary":
            d = cfg["params"].get("d", 1)
            for t in rd["trials"]:
                parts = dict(kv.split("=") for kv in t["recovered"].split(";"))
                rows.append((q, cfg["n"], int(d), int(parts["threshold"]), parts["accountant"]))
        else:
            for t in rd["trials"]:
                rows.append((q, cfg["n"], cfg["problem"], t["index"], int(t["success"]), t["queries"]))
    return rows


def _emit_table(record_dicts, out=sys.stdout):
    rows = table_rows(record_dicts)
    if rows and len(rows[0]) == 5:
        out.write("q,n,d,threshold_N,accountant\n")
    else:
        out.write("q,n,problem,trial,success,queries\n")
    for row in rows:
        out.write(",".join(str(x) for x in row) + "\n")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def parse_params(text):
    """Parse 'key=value,key=value'; shape values use dashes: shape=1-2-1."""
    if not text or text == "random":
        return {}
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise InvalidConfig("params", f"cannot parse {part!r}")
        k, v = part.split("=", 1)
        if k == "shape":
            out[k] = [int(x) for x in v.split("-")]
        else:
            out[k] = int(v)
    return out


def build_parser():
    ap = argparse.ArgumentParser(prog="glhsp", description="Hidden-subgroup experiments over GL_n(F_q)")
    sub = ap.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a seeded experiment batch")
    runp.add_argument("--problem", required=True, choices=PROBLEMS)
    runp.add_argument("--p", type=int, default=2)
    runp.add_argument("--r", type=int, default=1)
    runp.add_argument("--n", type=int, default=2)
    runp.add_argument("--params", default="random")
    runp.add_argument("--trials", type=int, default=10)
    runp.add_argument("--seed", type=int, default=0)
    runp.add_argument("--budget", type=int, default=DEFAULT_DENSE_BUDGET)
    runp.add_argument("--out", default=None)
    runp.add_argument("--format", default="json", choices=("json", "csv"))
    runp.add_argument("--workers", type=int, default=1)
    runp.add_argument("--verbose", action="store_true", help="dump per-stage trace records to stderr")

    verp = sub.add_parser("verify", help="re-verify a record file")
    verp.add_argument("record", nargs="+")

    tabp = sub.add_parser("table", help="emit a CSV trend table from records")
    tabp.add_argument("record", nargs="+")

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        try:
            config = ExperimentConfig(
                problem=args.problem, p=args.p, r=args.r, n=args.n,
                params=parse_params(args.params), trials=args.trials,
                seed=args.seed, budget=args.budget, out=args.out,
                format=args.format,
            )
            t0 = time.perf_counter()
            record = run(config, workers=args.workers, verbose=args.verbose)
        except InvalidConfig as exc:
            print(f"invalid config: {exc}", file=sys.stderr)
            return 2
        agg = record.aggregate
        wall = time.perf_counter() - t0
        print(
            f"{config.problem}: {agg['successes']}/{agg['trials']} ok, "
            f"rate={agg['success_rate']}, mean_queries={agg['mean_queries']}, "
            f"wall={wall:.2f}s",
            file=sys.stderr,
        )
        if not args.out:
            sys.stdout.write(record.to_json() if args.format == "json" else record.to_csv())
        return 0 if verify_record(record.to_dict()) else 1
    if args.command == "verify":
        ok = True
        for path in args.record:
            with open(path) as fh:
                rd = json.load(fh)
            good = verify_record(rd)
            print(f"{path}: {'ok' if good else 'FAILED'}")
            ok = ok and good
        return 0 if ok else 1
    if args.command == "table":
        dicts = []
        for path in args.record:
            with open(path) as fh:
                dicts.append(json.load(fh))
        _emit_table(dicts)
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
