"""Command-line front end.

Exit status: 0 success, 1 the protocol verdict was reject (or a table cell
failed), 2 usage, parse or input error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .abl import R_LABELS, REFERENCE_TABLE, SPIN_AXES, abl_distribution, vaa_fixture, vaa_table
from .attack import CONCEALMENT_THRESHOLD, optimal_cheat_unitary, synthesize_cheat_unitary, verify_binding_failure
from .errors import QbcError, ScriptError
from .linalg import StateVector
from .protocol import commitment_states, execute, helstrom_probability, parse, vaa_source
from .protocol.executor import MODES
from .protocol.nodes import Commit
from .serialize import dumps, loads

SCHEMA = "qbcsim.report/1"
OUTPUT_DIR_ENV = "QBCSIM_OUTPUT_DIR"
ARROWS = {"up": "↑", "down": "↓"}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    builtin: str | None
    script: str | None
    mode: str
    seed: int
    n: int | None
    commit: int
    reveal: int | None
    trials: int
    output: str | None
    format: str

    def replay_key(self) -> dict:
        """Fields that determine the report contents."""
        d = asdict(self)
        d.pop("output")
        return d


# -- helpers ---------------------------------------------------------------


def _load_script(cfg: RunConfig):
    if cfg.builtin is not None:
        if cfg.builtin != "vaa":
            raise UsageError(f"unknown built-in protocol {cfg.builtin!r}")
        return parse(vaa_source(cfg.n or 1))
    try:
        text = Path(cfg.script).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read script: {exc}") from None
    script = parse(text)
    if cfg.n is not None:
        from dataclasses import replace

        script = replace(script, rounds=cfg.n)
    return script


def _metrics(script, mode: str) -> dict | None:
    if not any(isinstance(s, Commit) for s in script.final_steps):
        return None
    cs = commitment_states(script, mode)
    d = cs.trace_distance
    if d <= CONCEALMENT_THRESHOLD:
        report = synthesize_cheat_unitary(cs.psi0, cs.psi1, cs.dim_a, cs.dim_b)
    else:
        report = optimal_cheat_unitary(cs.psi0, cs.psi1, cs.dim_a, cs.dim_b)
    broken, residual = verify_binding_failure(report, cs.psi0, cs.psi1)
    return {
        "per_particle_trace_distance": d,
        "concealing": d <= CONCEALMENT_THRESHOLD,
        "bob_guess_probability": helstrom_probability(cs.w0, cs.w1),
        "cheat_fidelity": report.cheat_fidelity,
        "cheat_method": report.method,
        "binding_broken": broken,
        "binding_residual": residual,
        "bob_subsystems": list(cs.bob_labels),
        "alice_side_subsystems": list(cs.alice_labels),
    }


def _trial(args) -> tuple[int, str | None]:
    script, seed, mode, commit, reveal = args
    return seed, execute(script, seed, mode, commit, reveal).verdict


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _emit(report: dict, cfg_out: str | None, fmt: str, text: str, default_name: str) -> None:
    body = dumps(report) + "\n" if fmt == "json" else text
    out = cfg_out
    if out is None and os.environ.get(OUTPUT_DIR_ENV):
        out = str(Path(os.environ[OUTPUT_DIR_ENV]) / default_name)
    if out is None or out == "-":
        sys.stdout.write(body)
        return
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text(body, encoding="utf-8")
    if fmt == "json":
        sys.stdout.write(text)
    print(f"report written to {out}")


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.12g}" if isinstance(x, float) else str(x)


# -- run -------------------------------------------------------------------


def build_run_report(cfg: RunConfig, jobs: int = 1) -> dict:
    script = _load_script(cfg)
    report = {
        "schema": SCHEMA,
        "version": __version__,
        "command": "run",
        "config": cfg.replay_key(),
        "seed": cfg.seed,
        "timestamp": _timestamp(),
        "notes": list(script.notes),
        "metrics": _metrics(script, cfg.mode),
    }
    if cfg.trials <= 1:
        tr = execute(script, cfg.seed, cfg.mode, cfg.commit, cfg.reveal)
        report["transcript"] = tr.to_dict()
        report["verdict"] = tr.verdict
        return report
    seeds = [int(s) for s in np.random.SeedSequence(cfg.seed).generate_state(cfg.trials, dtype=np.uint64)]
    work = [(script, s, cfg.mode, cfg.commit, cfg.reveal) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        results = [_trial(w) for w in work]
    verdicts = [v for _, v in results]
    accepted = sum(v == "accept" for v in verdicts)
    report["trials"] = {
        "count": cfg.trials,
        "accepted": accepted,
        "rejected": sum(v == "reject" for v in verdicts),
        "acceptance_rate": accepted / cfg.trials,
        "verdicts": verdicts,
    }
    report["verdict"] = None
    return report


def _run_text(report: dict) -> str:
    cfg = report["config"]
    lines = [
        f"protocol: {cfg['builtin'] or cfg['script']}  mode: {cfg['mode']}  seed: {report['seed']}",
    ]
    if "transcript" in report:
        tr = report["transcript"]
        kept = sum(r["kept"] for r in tr["rounds"])
        lines.append(f"rounds: {len(tr['rounds'])}  kept: {kept}  commit: {tr['commit_bit']}  reveal: {tr['reveal_bit']}")
        lines.append(f"verdict: {tr['verdict']}")
    if "trials" in report:
        t = report["trials"]
        lines.append(f"trials: {t['count']}  accepted: {t['accepted']}  rejected: {t['rejected']}  "
                     f"acceptance rate: {t['acceptance_rate']:.6g}")
    m = report["metrics"]
    if m:
        lines.append(f"per-particle trace distance between Bob's states: {_fmt(m['per_particle_trace_distance'])}")
        lines.append(f"Bob's optimal guess probability: {_fmt(m['bob_guess_probability'])}")
        lines.append(f"cheat fidelity ({m['cheat_method']}): {_fmt(m['cheat_fidelity'])}  "
                     f"binding broken: {m['binding_broken']}")
    for note in report["notes"]:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    if args.replay:
        try:
            cfg_dict = loads(Path(args.replay).read_text(encoding="utf-8"))["config"]
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot read config from {args.replay}: {exc}") from None
        cfg = RunConfig(output=args.out, **cfg_dict)
    else:
        if (args.builtin is None) == (args.script is None):
            raise UsageError("give exactly one of --builtin or --script")
        seed = args.seed if args.seed is not None else int(np.random.SeedSequence().entropy)
        cfg = RunConfig(args.builtin, args.script, args.mode, seed, args.n, args.commit, args.reveal,
                        args.trials, args.out, args.format)
    if cfg.n is not None and cfg.n < 1:
        raise UsageError("--n must be at least 1")
    report = build_run_report(cfg, jobs=args.jobs)
    _emit(report, cfg.output, cfg.format, _run_text(report), f"run-{cfg.seed}.{cfg.format}")
    return 1 if report["verdict"] == "reject" else 0


# -- attack ----------------------------------------------------------------


def read_state_file(path: str) -> np.ndarray:
    """One amplitude per line as ``re im`` (``im`` optional); ``#`` comments allowed."""
    amps = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if len(parts) > 2:
                raise ValueError
            re_, im = float(parts[0]), float(parts[1]) if len(parts) == 2 else 0.0
        except ValueError:
            raise UsageError(f"{path}, line {lineno}: expected 're im'") from None
        amps.append(complex(re_, im))
    if not amps:
        raise UsageError(f"{path}: no amplitudes")
    return np.array(amps)


def cmd_attack(args) -> int:
    a0, a1 = read_state_file(args.psi0), read_state_file(args.psi1)
    if a0.size != a1.size or a0.size != args.dim_a * args.dim_b:
        raise UsageError(f"states have {a0.size} and {a1.size} amplitudes; "
                         f"dim-a x dim-b = {args.dim_a * args.dim_b}")
    psi0 = StateVector.from_amplitudes(a0, (args.dim_a, args.dim_b), normalize=args.normalize)
    psi1 = StateVector.from_amplitudes(a1, (args.dim_a, args.dim_b), normalize=args.normalize)
    try:
        rep = synthesize_cheat_unitary(psi0, psi1, args.dim_a, args.dim_b)
    except QbcError:
        rep = optimal_cheat_unitary(psi0, psi1, args.dim_a, args.dim_b)
    broken, residual = verify_binding_failure(rep, psi0, psi1)
    u = rep.cheat_unitary
    report = {
        "schema": SCHEMA,
        "version": __version__,
        "command": "attack",
        "config": {"psi0": args.psi0, "psi1": args.psi1, "dim_a": args.dim_a, "dim_b": args.dim_b,
                   "normalize": args.normalize},
        "timestamp": _timestamp(),
        "concealment": rep.concealment,
        "cheat_fidelity": rep.cheat_fidelity,
        "method": rep.method,
        "degenerate_blocks": rep.degenerate_blocks,
        "binding_broken": broken,
        "binding_residual": residual,
        "cheat_unitary": {"real": u.real.tolist(), "imag": u.imag.tolist()},
    }
    lines = [
        f"concealment (trace distance of Bob's states): {rep.concealment:.12g}",
        f"cheat fidelity ({rep.method}): {rep.cheat_fidelity:.12g}",
        f"binding broken: {broken} (residual {residual:.3g})",
        "cheat unitary:",
    ]
    with np.printoptions(precision=6, suppress=True, linewidth=120):
        lines.append(str(u))
    _emit(report, args.out, args.format, "\n".join(lines) + "\n", "attack.json")
    return 0


# -- abl-table -------------------------------------------------------------


def _arrow(label: str) -> str:
    return ARROWS.get(label, label)


def cmd_abl_table(args) -> int:
    fixture = vaa_fixture()
    pre = None
    if args.pre:
        pre = StateVector.from_amplitudes(read_state_file(args.pre), (2, 2), normalize=True)
    posts = [args.post] if args.post else list(R_LABELS)
    axes = [args.obs] if args.obs else list(SPIN_AXES)
    for r in posts:
        if r not in R_LABELS:
            raise UsageError(f"--post must be one of {', '.join(R_LABELS)}")
    for s in axes:
        if s not in SPIN_AXES:
            raise UsageError(f"--obs must be one of {', '.join(SPIN_AXES)}")
    in_fixture = pre is None
    table = vaa_table() if in_fixture else None
    cells, lines, all_pass = [], [], True
    for r in posts:
        for s in axes:
            dist = abl_distribution(fixture.context(r, s, pre))
            best = max(dist, key=dist.get)
            cell = {"post": r, "observable": s, "probabilities": dist, "outcome": best}
            text = f"{r} {s}: " + "  ".join(f"{_arrow(k)} {v:.12f}" for k, v in dist.items())
            if in_fixture:
                ok = best == REFERENCE_TABLE[r][s] and abs(dist[best] - 1.0) <= 1e-10
                cell["expected"] = REFERENCE_TABLE[r][s]
                cell["pass"] = ok
                all_pass &= ok
                text += f"   {_arrow(best)}  {'PASS' if ok else 'FAIL'}"
            cells.append(cell)
            lines.append(text)
    report = {
        "schema": SCHEMA,
        "version": __version__,
        "command": "abl-table",
        "config": {"post": args.post, "obs": args.obs, "pre": args.pre},
        "timestamp": _timestamp(),
        "cells": cells,
    }
    if in_fixture:
        n_pass = sum(c["pass"] for c in cells)
        report["y_sign"] = table.y_sign
        report["passed"] = n_pass
        report["total"] = len(cells)
        if len(cells) == len(R_LABELS) * len(SPIN_AXES):
            header = "      " + "  ".join(f"{s:>4}" for s in SPIN_AXES)
            grid = [header] + [
                f"{r:>4}  " + "  ".join(f"{_arrow(table.outcomes[r][s]):>4}" for s in SPIN_AXES) for r in R_LABELS
            ]
            lines = grid + [""] + lines
        lines.append(f"{n_pass}/{len(cells)} PASS")
    _emit(report, args.out, args.format, "\n".join(lines) + "\n", "abl-table.json")
    return 0 if all_pass else 1


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbcsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qbcsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a protocol and write a report")
    src = run.add_mutually_exclusive_group()
    src.add_argument("--builtin", choices=["vaa"])
    src.add_argument("--script", help="path to a .qbc protocol script")
    src.add_argument("--replay", help="re-run the config embedded in an earlier JSON report")
    run.add_argument("--n", type=int, help="number of rounds")
    run.add_argument("--mode", choices=MODES, default="honest")
    run.add_argument("--commit", type=int, choices=[0, 1], default=0)
    run.add_argument("--reveal", type=int, choices=[0, 1], help="bit opened at reveal (default: the committed bit)")
    run.add_argument("--seed", type=int, help="run seed (default: random, recorded in the report)")
    run.add_argument("--trials", type=int, default=1, help="independent repetitions with derived seeds")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for --trials")
    run.add_argument("--out", help=f"report path ('-' for stdout; default ${OUTPUT_DIR_ENV} or stdout)")
    run.add_argument("--format", choices=["json", "text"], default="json")
    run.set_defaults(func=cmd_run)

    att = sub.add_parser("attack", help="synthesize the cheating unitary for two commitment states")
    att.add_argument("psi0")
    att.add_argument("psi1")
    att.add_argument("--dim-a", type=int, required=True)
    att.add_argument("--dim-b", type=int, required=True)
    att.add_argument("--normalize", action="store_true", help="normalize the input states")
    att.add_argument("--out")
    att.add_argument("--format", choices=["json", "text"], default="text")
    att.set_defaults(func=cmd_attack)

    tab = sub.add_parser("abl-table", help="compute the pre/post-selected outcome table")
    tab.add_argument("--post", help="post-selected R eigenstate (r1..r4)")
    tab.add_argument("--obs", help="spin observable (sx, sy, sz)")
    tab.add_argument("--pre", help="state file for a two-qubit pre-selected state")
    tab.add_argument("--out")
    tab.add_argument("--format", choices=["json", "text"], default="text")
    tab.set_defaults(func=cmd_abl_table)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ScriptError as exc:
        print(f"qbcsim: parse error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, QbcError, ValueError) as exc:
        print(f"qbcsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
