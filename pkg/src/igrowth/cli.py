"""igrowth command line: analyze, check, corpus, compare.

Exit codes: 0 success or EQUAL, 2 parse or usage error, 3 solver error,
4 mismatch between methods or against a reference.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import corpus
from .dsv import EvalConfig, SolverError, solve
from .grammar import Grammar, GrammarError, check_structure, classify_loading, parse_grammar
from .oracle import (DerivationConfig, ambiguous_words, enumerate_words, estimate_balance)
from .series import REFERENCE_KINDS

EXIT_OK, EXIT_PARSE, EXIT_SOLVER, EXIT_MISMATCH = 0, 2, 3, 4

# work budgets used when the method is chosen automatically
AUTO_FORMS = 300_000
AUTO_KEYS = 200_000


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def load(path: str) -> tuple[str, Grammar]:
    """Grammar from a file, falling back to the built-in corpus.

    ``corpus/<name>.ig`` resolves to the embedded copy unless that path exists
    on disk; ``corpus:<name>`` always means the embedded copy.
    """
    p = Path(path)
    name = None
    if path.startswith("corpus:"):
        name = path.split(":", 1)[1]
    elif not p.exists() and p.parent.name == "corpus" and p.suffix == ".ig":
        name = p.stem
    try:
        if name is not None:
            if name not in corpus.BY_NAME:
                raise CliError(f"no corpus entry {name!r}", EXIT_PARSE)
            return name, corpus.load_grammar(name)
        return p.stem, parse_grammar(p.read_text())
    except GrammarError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from None
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}", EXIT_PARSE) from None


def _balance_for(name: str, g: Grammar, n: int):
    if name in corpus.BY_NAME:
        return corpus.BY_NAME[name].balance
    est = estimate_balance(g, DerivationConfig(max_len=min(n, 10), max_forms=200_000))
    return est.C, est.K + 1


@dataclass
class AnalysisReport:
    name: str
    order: int
    method: str
    mode: str
    loading_class: str = ""
    coeffs: list[int] = field(default_factory=list)
    oracle: Optional[list[int]] = None
    solver: Optional[list[int]] = None
    verdict: Optional[str] = None
    flags: dict = field(default_factory=dict)
    ambiguous: list = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    ms: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"name": self.name, "method": self.method, "order": self.order,
               "mode": self.mode, "coeffs": [str(c) for c in self.coeffs],
               "class": self.loading_class, "flags": self.flags, "verdict": self.verdict,
               "ms": self.ms}
        if self.oracle is not None:
            out["oracle_coeffs"] = [str(c) for c in self.oracle]
        if self.solver is not None:
            out["dsv_coeffs"] = [str(c) for c in self.solver]
        if self.ambiguous:
            out["ambiguous"] = [[w, c] for w, c in self.ambiguous]
        if self.warnings:
            out["warnings"] = self.warnings
        return out

    def to_text(self) -> str:
        lines = [f"{self.name}: N={self.order} method={self.method} mode={self.mode} "
                 f"class={self.loading_class}"]
        if self.oracle is not None:
            lines.append(f"  oracle: {self.oracle}")
        if self.solver is not None:
            lines.append(f"  dsv:    {self.solver}")
        if self.verdict:
            lines.append(f"  verdict: {self.verdict}")
        for k, v in self.flags.items():
            lines.append(f"  {k}: {v}")
        if self.ambiguous:
            shown = ", ".join(f"{w} x{c}" for w, c in self.ambiguous[:5])
            lines.append(f"  ambiguous words: {shown}")
        for w in self.warnings:
            lines.append(f"  warning: {w}")
        lines.append("  time: " + ", ".join(f"{k} {v} ms" for k, v in self.ms.items()))
        return "\n".join(lines)


def analyze(name: str, g: Grammar, n: int, method: str = "auto", mode: str = "words",
            depth: Optional[int] = None) -> AnalysisReport:
    methods = {"oracle": ("oracle",), "dsv": ("dsv",), "generic": ("dsv",),
               "both": ("oracle", "dsv"), "auto": ("oracle", "dsv")}[method]
    entry = corpus.BY_NAME.get(name)
    if method == "auto" and entry is not None and n > entry.solver_order:
        # beyond the verified solver order the exact-key system is too large
        methods = ("oracle",)
    rep = AnalysisReport(name, n, method, mode, classify_loading(g).kind)
    balance = _balance_for(name, g, n)
    if "oracle" in methods:
        t0 = time.perf_counter()
        forms = AUTO_FORMS if method == "auto" else 2_000_000
        wc = enumerate_words(g, DerivationConfig(max_len=n, balance=balance, max_forms=forms))
        words, derivs = [0] * (n + 1), [0] * (n + 1)
        for w, c in wc.counts.items():
            words[len(w)] += 1
            derivs[len(w)] += c
        rep.ms["oracle"] = round(1000 * (time.perf_counter() - t0))
        rep.flags["oracle_truncated"] = wc.truncated
        rep.ambiguous = ambiguous_words(wc)
        rep.oracle = words if mode == "words" else derivs
        if method == "auto" and wc.truncated:
            rep.warnings.append("oracle budget exhausted; its counts are a lower bound")
    if "dsv" in methods:
        t0 = time.perf_counter()
        key_mode = "exact_stack" if method == "generic" else "auto"
        if name in corpus.BY_NAME and method != "generic":
            key_mode = corpus.BY_NAME[name].key_mode
        cfg = EvalConfig(order=n, depth_cap=depth, balance=balance, key_mode=key_mode,
                         ambiguity_probe=0 if rep.oracle is not None else 8)
        if method == "auto":
            cfg.max_keys = AUTO_KEYS
        try:
            res = solve(g, cfg)
        except SolverError as exc:
            if method != "auto" or rep.oracle is None:
                raise
            rep.warnings.append(f"dsv skipped: {exc}")
        else:
            rep.solver = list(res.coeffs)
            rep.flags.update(key_mode=res.key_mode, depth_cap=res.depth_cap,
                             stabilized=res.stabilized, memo_keys=res.keys)
            rep.warnings.extend(res.warnings)
            if mode == "words" and (rep.ambiguous or res.warnings):
                rep.warnings.append("dsv counts derivations; word counts differ for ambiguous grammars")
        rep.ms["dsv"] = round(1000 * (time.perf_counter() - t0))
    if rep.oracle is not None and rep.solver is not None:
        if not rep.flags.get("oracle_truncated"):
            rep.verdict = str(corpus.compare_coeffs(rep.solver, derivs))
        else:
            rep.verdict = "SKIPPED (oracle truncated)"
    rep.coeffs = rep.oracle if rep.oracle is not None else rep.solver
    return rep


# --------------------------------------------------------------------------
# subcommands


def cmd_analyze(args) -> int:
    name, g = load(args.path)
    try:
        rep = analyze(name, g, args.N, args.method, args.mode, args.depth)
    except SolverError as exc:
        raise CliError(f"solver error: {exc}", EXIT_SOLVER) from None
    print(json.dumps(rep.to_json()) if args.json else rep.to_text())
    return EXIT_MISMATCH if rep.verdict and rep.verdict.startswith("DIFFER") else EXIT_OK


def cmd_check(args) -> int:
    name, g = load(args.path)
    t0 = time.perf_counter()
    s = check_structure(g)
    lc = classify_loading(g)
    cfg = DerivationConfig(max_len=args.max_len, max_forms=500_000,
                           balance=corpus.BY_NAME[name].balance if name in corpus.BY_NAME else None)
    bal = estimate_balance(g, cfg)
    amb = ambiguous_words(enumerate_words(g, cfg))
    loaders = ", ".join(f"{v}({i})" for v, i in lc.loaders) or "none"
    if lc.kind == "serial":
        chain = " -> ".join(f"{v}({i})" for v, i in lc.loaders)
        loaders = f"serial chain {chain}"
    data = {
        "name": name,
        "epsilon_free": s.epsilon_free,
        "strict_reduced": s.strict_reduced,
        "unreachable": sorted(s.unreachable_vars),
        "unproductive": sorted(s.unproductive_vars),
        "class": lc.kind,
        "loaders": [[v, i] for v, i in lc.loaders],
        "balance": {"C": str(bal.C), "K": bal.K, "satisfied": bal.satisfied},
        "ambiguous": [[w, c] for w, c in amb],
        "bound": args.max_len,
        "ms": round(1000 * (time.perf_counter() - t0)),
    }
    if args.json:
        print(json.dumps(data))
        return EXIT_OK
    print(f"{name}")
    print(f"  epsilon_free: {s.epsilon_free}   strict_reduced: {s.strict_reduced}")
    if s.unreachable_vars or s.unproductive_vars:
        print(f"  unreachable: {sorted(s.unreachable_vars)}  unproductive: {sorted(s.unproductive_vars)}")
    for note in s.notes:
        print(f"  note: {note}")
    print(f"  loading: {lc.kind}, loaders {loaders}")
    fit = "fits" if bal.satisfied else "no fit with C <= 8"
    print(f"  balance: depth <= {bal.C}*|w| + {bal.K} ({fit}, {len(bal.witnessed_pairs)} pairs)")
    if amb:
        shown = ", ".join(f"{w} x{c}" for w, c in amb[:5])
        print(f"  ambiguous within length {args.max_len}: {shown}")
    else:
        print(f"  unambiguous within length {args.max_len}")
    return EXIT_OK


def _run_one(name: str) -> tuple[str, bool, str]:
    r = corpus.run_entry(corpus.get_entry(name))
    return name, r.passed, r.report()


def cmd_corpus(args) -> int:
    if args.action == "list":
        for e in corpus.ENTRIES:
            spec = "; ".join(c.spec if len(c.spec) < 40 else c.spec[:37] + "..." for c in e.checks)
            spec = spec or "oracle agreement only"
            if e.expected_open:
                spec = "open (authored): " + spec
            print(f"{e.name:<15} N={e.order:<3} {e.description}")
            print(f"{'':<15} expect {spec}")
        return EXIT_OK
    names = args.names or [e.name for e in corpus.ENTRIES]
    for n in names:
        if n not in corpus.BY_NAME:
            raise CliError(f"no corpus entry {n!r}", EXIT_PARSE)
    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_run_one, names))
    else:
        results = []
        for n in names:
            results.append(_run_one(n))
            print(results[-1][2], flush=True)
    if args.jobs > 1:
        for _, _, text in results:
            print(text)
    failed = [n for n, ok, _ in results if not ok]
    print(f"{len(results) - len(failed)}/{len(results)} passed" + (f"; failed: {failed}" if failed else ""))
    return EXIT_MISMATCH if failed else EXIT_OK


def _looks_like_coeffs(text: str) -> bool:
    return all(part.strip().lstrip("-").isdigit() for part in text.strip("[] ").split(",") if part.strip()) \
        and "," in text


def cmd_compare(args) -> int:
    t0 = time.perf_counter()
    if _looks_like_coeffs(args.source):
        got = corpus.parse_coeff_list(args.source)
        n = min(args.N, len(got) - 1)
        name = "coefficients"
        got = got[: n + 1]
    else:
        name, g = load(args.source)
        n = args.N
        try:
            rep = analyze(name, g, n, args.method, args.mode, args.depth)
        except SolverError as exc:
            raise CliError(f"solver error: {exc}", EXIT_SOLVER) from None
        if rep.verdict and rep.verdict.startswith("DIFFER"):
            print(f"{name}: methods disagree: {rep.verdict}")
            return EXIT_MISMATCH
        got = rep.coeffs
    try:
        expected = corpus.resolve_spec(args.against, n).coeffs
    except corpus.SpecError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None
    v = corpus.compare_coeffs(got, expected, args.start)
    ms = round(1000 * (time.perf_counter() - t0))
    if args.json:
        print(json.dumps({"name": name, "method": args.method, "order": n,
                          "coeffs": [str(c) for c in got], "against": args.against,
                          "verdict": "EQUAL" if v.equal else "DIFFER",
                          "first_diff": v.first_diff, "ms": ms}))
    else:
        print(f"{name} vs {args.against}: {v if not v.equal else f'EQUAL up to N={n}'}")
    return EXIT_OK if v.equal else EXIT_MISMATCH


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="igrowth",
                                 description="Growth series of indexed grammars.")
    sub = ap.add_subparsers(dest="command", required=True)

    def engine_flags(p):
        p.add_argument("-N", type=int, default=20, help="series order (default 20)")
        p.add_argument("--method", choices=["auto", "oracle", "dsv", "both", "generic"],
                       default="auto",
                       help="auto runs both engines with a bounded oracle budget")
        p.add_argument("--mode", choices=["words", "derivations"], default="words")
        p.add_argument("--depth", type=int, default=None, help="solver depth cap M")
        p.add_argument("--json", action="store_true", help="one JSON object per report")

    p = sub.add_parser("analyze", help="coefficients by oracle and/or solver")
    p.add_argument("path", help="grammar file, corpus/<name>.ig or corpus:<name>")
    engine_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("check", help="structure, loading class, balance, ambiguity")
    p.add_argument("path")
    p.add_argument("--max-len", type=int, default=10, help="oracle bound for the scans")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("corpus", help="built-in grammars")
    csub = p.add_subparsers(dest="action", required=True)
    csub.add_parser("list", help="entries and expected results")
    run = csub.add_parser("run", help="check entries against expected results")
    run.add_argument("names", nargs="*")
    run.add_argument("-j", "--jobs", type=int, default=1)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("compare", help="compare against a reference sequence")
    p.add_argument("source", help="grammar path or comma-separated coefficients")
    p.add_argument("--against", required=True,
                   help=f"{'|'.join(REFERENCE_KINDS)}|rational:P/Q|coeffs:...|file:PATH")
    p.add_argument("--start", type=int, default=0, help="first index compared")
    engine_flags(p)
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"igrowth: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
