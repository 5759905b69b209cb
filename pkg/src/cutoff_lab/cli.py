"""cutoff-lab command line.

Subcommands: describe, spectrum, mix, hit, simulate, verify, sweep.
Exit codes: 0 success / all checks pass, 1 an inequality failed, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import CutoffLabError, UsageError
from .tree_model import (
    VertexPair,
    enumerate_profiles,
    family_profiles,
    load_tree_spec,
    oracle_cap,
    special_level,
)

COMMANDS = ("describe", "spectrum", "mix", "hit", "simulate", "verify", "sweep")

HEADERS = {
    "describe": ["level", "children", "size", "degree", "pi_vertex", "pi_level"],
    "spectrum": ["value", "multiplicity", "source"],
    "mix": ["epsilon", "t_mix", "t_rel", "ratio", "coupling_bound"],
    "mix_profile": ["t", "d", "argmax_level"],
    "hit": ["lx", "ly", "lq", "E", "Var", "var_over_e2"],
    "simulate": ["lx", "ly", "lq", "seed", "samples", "mean", "variance", "std_error"],
    "simulate_rs": [
        "lx", "ly", "lq", "seed", "samples", "mean_R", "mean_S",
        "var_R", "var_S", "cov_RS", "cov_se", "min_R",
    ],
    "verify": [
        "tree", "h", "n", "t_mix", "t_rel", "ratio", "min_var_ratio",
        "checks", "failed", "failed_checks",
    ],
}


@dataclass
class RunConfig:
    command: str
    tree: str | None = None
    corpus: tuple[int, int] | None = None
    family: dict | None = None
    epsilon: float = 0.25
    epsilons: tuple[float, ...] | None = None
    profile: bool = False
    horizon: int | None = None
    pair: VertexPair | None = None
    return_level: int | None = None
    samples: int = 10000
    seed: int = 0
    rs: bool = False
    dense: bool = False
    out: str | None = None
    json_out: str | None = None
    oracle_cap: int = 5000
    threads: int = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_pair(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected max_h,max_children")
    try:
        a, b = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError("expected two integers") from None
    return a, b


def _pair(text: str) -> VertexPair:
    try:
        return VertexPair.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _family(text: str) -> dict:
    raw = text if text.lstrip().startswith("{") else None
    if raw is None:
        try:
            raw = Path(text).read_text()
        except OSError as exc:
            raise argparse.ArgumentTypeError(f"cannot read family spec: {exc}") from None
    try:
        spec = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"family spec is not valid JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise argparse.ArgumentTypeError("family spec must be a JSON object")
    return spec


def _epsilons(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cutoff-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--out", help="output CSV path (default stdout)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--oracle-cap", type=int, default=None)

    def tree_arg(p, required=True):
        p.add_argument("--tree", required=required, help="tree-spec JSON file")

    p = sub.add_parser("describe", parents=[common], help="per-level structure")
    tree_arg(p)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues as CSV")
    tree_arg(p)
    p.add_argument("--dense", action="store_true", help="use the dense oracle")

    p = sub.add_parser("mix", parents=[common], help="mixing time / TV profile")
    tree_arg(p)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--profile", action="store_true", help="emit d(t) for t = 0..T")
    p.add_argument("--horizon", type=int, default=None, help="T for --profile")

    p = sub.add_parser("hit", parents=[common], help="hitting or return moments")
    tree_arg(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--pair", type=_pair, help="lx,ly,lq")
    g.add_argument("--return", dest="return_level", type=int, help="level of x")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo hitting times")
    tree_arg(p)
    p.add_argument("--pair", type=_pair, required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rs", action="store_true", help="report the R/S split")

    p = sub.add_parser("verify", parents=[common], help="check every bound")
    tree_arg(p, required=False)
    p.add_argument("--corpus", type=_int_pair, help="max_h,max_children")
    p.add_argument("--family", type=_family, help="family spec (file or inline JSON)")
    p.add_argument("--json", dest="json_out", help="also write full reports as JSON")

    p = sub.add_parser("sweep", parents=[common], help="cutoff table for a family")
    p.add_argument("--family", type=_family, required=True)
    p.add_argument("--epsilons", type=_epsilons, default=None)
    return parser


def parse_args(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(list(argv))
    cfg = RunConfig(command=ns.command)
    for name in (
        "tree", "corpus", "family", "epsilon", "epsilons", "profile", "horizon",
        "pair", "return_level", "samples", "seed", "rs", "dense", "out", "json_out",
    ):
        if hasattr(ns, name) and getattr(ns, name) is not None:
            setattr(cfg, name, getattr(ns, name))
    cfg.threads = ns.threads
    if ns.oracle_cap is not None:
        cfg.oracle_cap = ns.oracle_cap
    else:
        try:
            cfg.oracle_cap = oracle_cap()
        except CutoffLabError as exc:
            raise UsageError(str(exc)) from None

    if not 0 < cfg.epsilon < 1:
        raise UsageError(f"--epsilon must lie in (0, 1), got {cfg.epsilon}")
    if cfg.epsilons is not None and not all(0 < e < 1 for e in cfg.epsilons):
        raise UsageError("--epsilons values must lie in (0, 1)")
    if cfg.seed < 0:
        raise UsageError("--seed must be >= 0")
    if cfg.samples < 1:
        raise UsageError("--samples must be >= 1")
    if cfg.threads < 1:
        raise UsageError("--threads must be >= 1")
    if cfg.oracle_cap < 1:
        raise UsageError("--oracle-cap must be >= 1")
    if cfg.horizon is not None and cfg.horizon < 0:
        raise UsageError("--horizon must be >= 0")
    if cfg.command == "verify":
        sources = [cfg.tree is not None, cfg.corpus is not None, cfg.family is not None]
        if sum(sources) != 1:
            raise UsageError("verify needs exactly one of --tree, --corpus, --family")
        if cfg.corpus is not None and min(cfg.corpus) < 1:
            raise UsageError("--corpus values must be >= 1")
    return cfg


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write(cfg: RunConfig, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    if cfg.out:
        Path(cfg.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _cmd_describe(cfg, profile):
    pi_levels = profile.pi_levels()
    rows = [
        [k, profile.children(k), profile.level_sizes[k], profile.level_degrees[k],
         profile.pi_vertex(k), float(pi_levels[k])]
        for k in range(profile.height + 1)
    ]
    _write(cfg, HEADERS["describe"], rows)
    return 0


def _cmd_spectrum(cfg, profile):
    from .spectral import dense_spectrum, decomposed_spectrum
    from .tree_model import explicit_tree

    profile.require_nondegenerate()
    if cfg.dense:
        spec = dense_spectrum(explicit_tree(profile, cap=cfg.oracle_cap))
    else:
        spec = decomposed_spectrum(profile)
    rows = [[v, m, spec.source] for v, m in spec.grouped()]
    _write(cfg, HEADERS["spectrum"], rows)
    return 0


def _cmd_mix(cfg, profile):
    from .mixing import coupling_bound, mix_profile, mixing_time
    from .spectral import lambda2

    if cfg.profile:
        mp = mix_profile(profile, (cfg.epsilon,), horizon=cfg.horizon)
        rows = [[t, float(d), int(k)] for t, (d, k) in enumerate(zip(mp.distances, mp.argmax_level))]
        _write(cfg, HEADERS["mix_profile"], rows)
        return 0
    t_mix = mixing_time(profile, cfg.epsilon)
    _, t_rel = lambda2(profile)
    _write(cfg, HEADERS["mix"], [[cfg.epsilon, t_mix, t_rel, t_mix / t_rel, coupling_bound(profile)]])
    return 0


def _cmd_hit(cfg, profile):
    from .hitting import hitting_moments, return_moments

    if cfg.pair is not None:
        m = hitting_moments(profile, cfg.pair)
        p = cfg.pair
        row = [p.lx, p.ly, p.lq]
    else:
        m = return_moments(profile, cfg.return_level)
        lv = cfg.return_level
        row = [lv, lv, lv]
    _write(cfg, HEADERS["hit"], [row + [m.E, m.Var, m.var_ratio]])
    return 0


def _cmd_simulate(cfg, profile):
    from .simulate import sample_hitting, sample_rs

    p = cfg.pair
    base = [p.lx, p.ly, p.lq, cfg.seed, cfg.samples]
    if cfg.rs:
        s = sample_rs(profile, p, cfg.samples, cfg.seed)
        row = base + [s.mean_R, s.mean_S, s.var_R, s.var_S, s.cov_RS, s.cov_se, s.min_R]
        _write(cfg, HEADERS["simulate_rs"], [row])
    else:
        s = sample_hitting(profile, p, cfg.samples, cfg.seed)
        _write(cfg, HEADERS["simulate"], [base + [s.mean, s.variance, s.standard_error]])
    return 0


def _cmd_verify(cfg):
    from .verify import verify_corpus

    if cfg.tree is not None:
        profiles = [load_tree_spec(cfg.tree)]
    elif cfg.corpus is not None:
        profiles = enumerate_profiles(*cfg.corpus)
    else:
        profiles = [p for _, p in family_profiles(cfg.family)]
    reports = verify_corpus(profiles, threads=cfg.threads, oracle_cap=cfg.oracle_cap)
    rows = [
        [r.tree, r.h, r.n, r.t_mix, r.t_rel, r.ratio, r.min_var_ratio, len(r.checks),
         len(r.failed_checks), ";".join(r.failed_checks)]
        for r in reports
    ]
    _write(cfg, HEADERS["verify"], rows)
    if cfg.json_out:
        Path(cfg.json_out).write_text(json.dumps([r.to_dict() for r in reports], indent=1))
    failed = [r for r in reports if not r.passed]
    for r in failed:
        print(f"cutoff-lab: {r.tree} failed {', '.join(r.failed_checks)}", file=sys.stderr)
    return 1 if failed else 0


def _cmd_sweep(cfg):
    from .mixing import DEFAULT_EPS_GRID
    from .verify import cutoff_table

    grid = cfg.epsilons or DEFAULT_EPS_GRID
    table = cutoff_table(cfg.family, grid)
    eps = sorted(set(float(e) for e in grid) | {0.25})
    window_eps = [e for e in eps if table and e in table[0].window_ratio]
    header = (
        ["index", "tree", "n", "t_rel"]
        + [f"t_mix({e:g})" for e in eps]
        + [f"t_mix({e:g})/t_mix({1 - e:g})" for e in window_eps]
        + [f"t_mix({e:g})/t_rel" for e in eps]
        + ["bounded", "monotone"]
    )
    rows = [
        [r.index, r.tree, r.n, r.t_rel]
        + [r.t_mix[e] for e in eps]
        + [r.window_ratio[e] for e in window_eps]
        + [r.relax_ratio[e] for e in eps]
        + [int(r.bounded), int(r.monotone)]
        for r in table
    ]
    _write(cfg, header, rows)
    return 0 if all(r.bounded and r.monotone for r in table) else 1


def run(cfg: RunConfig) -> int:
    try:
        if cfg.command == "verify":
            return _cmd_verify(cfg)
        if cfg.command == "sweep":
            return _cmd_sweep(cfg)
        if cfg.tree is None:
            raise UsageError(f"{cfg.command} needs --tree")
        profile = load_tree_spec(cfg.tree)
        special_level(profile)  # rejects height-0 trees up front
        handler = {
            "describe": _cmd_describe,
            "spectrum": _cmd_spectrum,
            "mix": _cmd_mix,
            "hit": _cmd_hit,
            "simulate": _cmd_simulate,
        }[cfg.command]
        return handler(cfg, profile)
    except (CutoffLabError, ValueError, OSError) as exc:
        print(f"cutoff-lab: {exc}", file=sys.stderr)
        return 2


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        print(f"cutoff-lab: usage error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
