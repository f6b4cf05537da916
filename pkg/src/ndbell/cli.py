"""
Command-line front end.

Every command writes CSV (canonical) into ``--out``; ``--format svg-plot``
additionally renders an SVG next to it.  Settings resolve as
command-line flag > ``--config`` JSON file > built-in default.

Exit codes: 0 success, 1 check failed, 2 configuration or I/O error,
3 LOCC bound violated.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import svgplot
from .errors import BoundViolation, LocalityViolation, ValidationError
from .locc import CLASSICAL_BOUND, certify_bound, write_campaign_csv
from .noise import NOISELESS, NoiseModel
from .protocol import CLASSES, DEFAULT_WIRES, prepare_state, run_experiment, run_trial, trial_rng
from .qstate import BellLabel, Gate
from .session import ApplyGate, LocalRequest, Measure, PartyId, dump_transcript, referee_execute, run_session
from .werner import analytic_success, derive_event_table_by_simulation, event_table, sweep_lambda, write_sweep_csv

DEFAULT_SEED = 20240117

CSV_COLUMNS = """\
CSV outputs (lines starting with '#' are comments):
  discriminate.csv   target,shots,p_d,p_d_stderr,p_f,p_f_stderr,p_succ,p_succ_stderr
  truth_table.csv    target,shots,TT,TF,FT,FF
  sweep_lambda.csv   lambda,p_succ,stderr,shots,analytic
  locc_campaign.csv  ancilla_dim,restart,iteration,p_win (summary in trailing comments)
  locc_summary.csv   item,p_win
  event_table.csv    first,second,p_f,p_d,derived_p_f,derived_p_d,match
  session_check.csv  trials,mismatches,injected_cross_party,rejected
"""


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    shots: int = 10000
    seed: int = DEFAULT_SEED
    lambda_grid: list[float] = field(default_factory=lambda: [round(0.1 * k, 10) for k in range(11)])
    noise: NoiseModel = NOISELESS
    targets: list[BellLabel] = field(default_factory=lambda: list(BellLabel))
    out: str = "."
    format: str = "csv"
    parallel: int = field(default_factory=lambda: os.cpu_count() or 1)
    restarts: int = 20
    iterations: int = 500
    dims: list[int] = field(default_factory=lambda: [1, 2, 4])
    baseline_only: bool = False
    transcript: str | None = None

    def validate(self) -> None:
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if self.restarts < 1 or self.iterations < 1:
            raise ConfigError("restarts and iterations must be >= 1")
        if any(not 0.0 <= x <= 1.0 for x in self.lambda_grid):
            raise ConfigError("lambda grid values must lie in [0, 1]")
        if self.format not in ("csv", "svg-plot"):
            raise ConfigError(f"unknown format {self.format!r}")
        if self.parallel < 1:
            raise ConfigError("parallel must be >= 1")
        if any(d not in (1, 2, 4) for d in self.dims):
            raise ConfigError("ancilla dimensions must be in {1, 2, 4}")


def parse_grid(text) -> list[float]:
    """``"0:1:0.1"`` (inclusive range) or ``"0,0.5,1"``."""
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    text = str(text).strip()
    if ":" in text:
        lo, hi, step = (float(x) for x in text.split(":"))
        n = int(round((hi - lo) / step))
        return [round(lo + k * step, 10) for k in range(n + 1)]
    return [float(x) for x in text.split(",") if x.strip()]


def _coerce(name: str, value):
    if value is None:
        return None
    if name == "noise":
        if isinstance(value, dict):
            return NoiseModel.from_dict(value)
        if isinstance(value, NoiseModel):
            return value
        return NoiseModel.parse(str(value))
    if name == "lambda_grid":
        return parse_grid(value)
    if name == "targets":
        if isinstance(value, str):
            value = value.split(",")
        return [v if isinstance(v, BellLabel) else BellLabel.parse(str(v)) for v in value]
    if name == "dims":
        if isinstance(value, str):
            value = value.split(",")
        return [int(v) for v in value]
    if name in ("shots", "seed", "parallel", "restarts", "iterations"):
        return int(value)
    if name == "baseline_only":
        return bool(value)
    return value


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    names = [f.name for f in fields(RunConfig)]
    layers = []
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(data) - set(names)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)} in {args.config}")
        layers.append(data)
    layers.append({n: getattr(args, n, None) for n in names})
    try:
        for layer in layers:
            for name, value in layer.items():
                value = _coerce(name, value)
                if value is not None:
                    setattr(cfg, name, value)
    except (ValueError, ValidationError) as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _header(title: str, cfg: RunConfig, extra: str = "") -> str:
    n = cfg.noise
    lines = [title, f"shots={cfg.shots} seed={cfg.seed} noise=p1:{n.p1},p2:{n.p2},readout_flip:{n.readout_flip}"]
    if extra:
        lines.append(extra)
    return "\n".join(lines)


def _write_csv(path: Path, header: str, columns: list[str], rows: list[list]) -> None:
    try:
        with open(path, "w", newline="") as fh:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(columns)
            writer.writerows(rows)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc


def _fmt(x: float) -> str:
    return f"{x:.6f}"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_discriminate(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    stats = run_experiment(cfg.targets, cfg.shots, noise=cfg.noise, rng=np.random.default_rng(cfg.seed), workers=cfg.parallel)
    rows = []
    per = {k: stats.per_target(k) for k in ("p_d", "p_f", "p_succ")}
    for t, label in enumerate(stats.targets):
        n = int(stats.shots_per_target[t])
        row = [str(label), n]
        for k in ("p_d", "p_f", "p_succ"):
            v = float(per[k][t])
            row += [_fmt(v), _fmt(stats.stderr(v, n))]
        rows.append(row)
    s = stats.summary()
    rows.append(["average", stats.shots] + [_fmt(s[k]) for k in ("p_d", "p_d_stderr", "p_f", "p_f_stderr", "p_succ", "p_succ_stderr")])
    header = _header("figure: discrimination probability (P_D) and unchanged-state probability (P_F) per Bell state", cfg)
    _write_csv(out / "discriminate.csv", header, ["target", "shots", "p_d", "p_d_stderr", "p_f", "p_f_stderr", "p_succ", "p_succ_stderr"], rows)
    if cfg.format == "svg-plot":
        svgplot.bar_chart(
            out / "discriminate.svg",
            [str(t) for t in stats.targets],
            {"P_D": per["p_d"], "P_F": per["p_f"]},
            "Discrimination (P_D) and unchanged state (P_F)",
        )
    print(f"P_D={s['p_d']:.4f}+-{s['p_d_stderr']:.4f} P_F={s['p_f']:.4f}+-{s['p_f_stderr']:.4f} "
          f"P_succ={s['p_succ']:.4f}+-{s['p_succ_stderr']:.4f}")
    return 0


def cmd_truth_table(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    stats = run_experiment(cfg.targets, cfg.shots, noise=cfg.noise, rng=np.random.default_rng(cfg.seed), workers=cfg.parallel)
    rates = {c: stats.per_target(c) for c in CLASSES}
    rows = [[str(t), int(stats.shots_per_target[i])] + [_fmt(rates[c][i]) for c in CLASSES] for i, t in enumerate(stats.targets)]
    avg = stats.class_rates()
    rows.append(["average", stats.shots] + [_fmt(avg[c]) for c in CLASSES])
    header = _header("figure: truth table of discrimination (first letter) x state preserved (second letter)", cfg)
    _write_csv(out / "truth_table.csv", header, ["target", "shots", *CLASSES], rows)
    if cfg.format == "svg-plot":
        svgplot.bar_chart(out / "truth_table.svg", [str(t) for t in stats.targets], rates, "Truth table TT / TF / FT / FF")
    print(" ".join(f"{c}={avg[c]:.4f}" for c in CLASSES))
    return 0


def cmd_sweep_lambda(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    points = sweep_lambda(cfg.lambda_grid, cfg.shots, np.random.default_rng(cfg.seed), noise=cfg.noise, workers=cfg.parallel)
    header = _header("figure: success probability vs Werner weight lambda, analytic curve (1 - 3 lambda/4)^2", cfg)
    try:
        write_sweep_csv(points, out / "sweep_lambda.csv", header)
    except OSError as exc:
        raise ConfigError(f"cannot write {out / 'sweep_lambda.csv'}: {exc}") from exc
    if cfg.format == "svg-plot":
        xs = np.linspace(0, 1, 101)
        svgplot.line_chart(
            out / "sweep_lambda.svg",
            [p.lam for p in points], [p.p_succ for p in points], [p.stderr for p in points],
            xs, [analytic_success(x) for x in xs],
            "Success probability vs lambda", "lambda", "P_succ", hline=CLASSICAL_BOUND,
        )
    for p in points:
        print(f"lambda={p.lam:.3f} P_succ={p.p_succ:.4f}+-{p.stderr:.4f} analytic={p.analytic:.4f}")
    return 0


def cmd_locc_bound(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    try:
        result = certify_bound(
            cfg.dims, cfg.restarts, cfg.iterations, np.random.default_rng(cfg.seed),
            workers=cfg.parallel, baseline_only=cfg.baseline_only,
        )
    except BoundViolation as exc:
        print(f"BOUND VIOLATION: {exc}", file=sys.stderr)
        return 3
    for name, value in result.baselines.items():
        print(f"baseline {name}: {value:.12g}")
    header = (
        f"LOCC search: restarts={cfg.restarts} iterations={cfg.iterations} dims={cfg.dims} seed={cfg.seed}\n"
        f"classical bound {CLASSICAL_BOUND}"
    )
    rows = [[f"baseline_{k}", f"{v:.12f}"] for k, v in result.baselines.items()]
    if result.runs:
        write_campaign_csv(result, out / "locc_campaign.csv", header)
        rows += [[f"best_dim_{r.ancilla_dim}", f"{r.best.value:.12f}"] for r in result.runs]
        rows += [["best", f"{result.best:.12f}"], ["max_evaluated", f"{result.max_evaluated:.12f}"]]
        print(f"best p_win={result.best:.12f} (bound {CLASSICAL_BOUND})")
    _write_csv(out / "locc_summary.csv", header, ["item", "p_win"], rows)
    return 0


def cmd_event_table(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    table = event_table()
    derived = derive_event_table_by_simulation()
    rows = []
    ok = True
    for ref, sim in zip(table, derived):
        match = ref == sim
        ok &= match
        rows.append([str(ref.ancilla_basis[0]), str(ref.ancilla_basis[1]), ref.p_f, ref.p_d, sim.p_f, sim.p_d, int(match)])
    _write_csv(out / "event_table.csv", "ancilla Bell components vs (p_f, p_d) for target PhiPlus", ["first", "second", "p_f", "p_d", "derived_p_f", "derived_p_d", "match"], rows)
    for r in rows:
        print(",".join(map(str, r)))
    print("event table matches simulation" if ok else "EVENT TABLE MISMATCH")
    return 0 if ok else 1


def cmd_session_check(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    mismatches = 0
    transcript: list[str] = []
    for i in range(cfg.shots):
        target = BellLabel(i % 4)
        mono = run_trial(target, noise=cfg.noise, rng=trial_rng(cfg.seed, i))
        res = run_session(target, noise=cfg.noise, rng=trial_rng(cfg.seed, i))
        mismatches += mono != res.record or res.alice_guess != res.bob_guess
        if i == 0:
            transcript = res.transcript
    # every pairing of an own qubit with a foreign one, as gates and as a joint readout
    w = DEFAULT_WIRES
    injected = rejected = 0
    state = prepare_state(BellLabel.PHI_PLUS, BellLabel.PHI_PLUS, BellLabel.PHI_PLUS, NOISELESS, np.random.default_rng(0))
    for party, mine, theirs in ((PartyId.ALICE, w.alice, w.bob), (PartyId.BOB, w.bob, w.alice)):
        for q in sorted(mine):
            for r in sorted(theirs):
                for action in (ApplyGate(Gate.cnot(q, r)), ApplyGate(Gate.cnot(r, q)), Measure((q, r))):
                    injected += 1
                    try:
                        referee_execute(LocalRequest(party, action), state, NOISELESS, np.random.default_rng(0))
                    except LocalityViolation:
                        rejected += 1
    _write_csv(out / "session_check.csv", _header("two-party session vs monolithic simulation", cfg),
               ["trials", "mismatches", "injected_cross_party", "rejected"], [[cfg.shots, mismatches, injected, rejected]])
    if cfg.transcript:
        dump_transcript(transcript, cfg.transcript)
    print(f"trials={cfg.shots} mismatches={mismatches} cross-party requests rejected {rejected}/{injected}")
    return 0 if mismatches == 0 and rejected == injected else 1


COMMANDS = {
    "discriminate": (cmd_discriminate, "P_D / P_F per Bell state"),
    "truth-table": (cmd_truth_table, "TT/TF/FT/FF rates per Bell state"),
    "sweep-lambda": (cmd_sweep_lambda, "success probability vs Werner lambda"),
    "locc-bound": (cmd_locc_bound, "numerically certify the p_win <= 1/4 bound for unentangled strategies"),
    "event-table": (cmd_event_table, "ancilla-component event table, checked by exhaustive simulation"),
    "session-check": (cmd_session_check, "two-party harness vs monolithic simulation"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ndbell",
        description="Nondestructive Bell-state discrimination between distant parties.",
        epilog=CSV_COLUMNS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, epilog=CSV_COLUMNS, formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", help="JSON file with RunConfig fields")
        p.add_argument("--shots", type=int, help="shots per target / per lambda point / session trials")
        p.add_argument("--seed", type=int, help=f"master seed (default {DEFAULT_SEED})")
        p.add_argument("--lambda-grid", dest="lambda_grid", help="'lo:hi:step' or comma list")
        p.add_argument("--noise", help="'p1,p2,readout_flip', 'hardware' or 'none'")
        p.add_argument("--targets", help="comma list of Bell labels, e.g. PhiPlus,PsiMinus")
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=["csv", "svg-plot"])
        p.add_argument("--parallel", type=int, help="worker processes (default: CPU count)")
        if name == "locc-bound":
            p.add_argument("--restarts", type=int)
            p.add_argument("--iterations", type=int)
            p.add_argument("--dims", help="comma list of ancilla dimensions from {1,2,4}")
            p.add_argument("--baseline-only", dest="baseline_only", action="store_true", default=None)
        if name == "session-check":
            p.add_argument("--transcript", help="write the first session's transcript here")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command][0](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
