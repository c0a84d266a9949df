"""Command-line entry point: ``mutualcover {simulate,wh,transform,validate,reproduce-paper}``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from ._backend import BACKEND
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .errors import NetProfitError, PreconditionError, UnsupportedDriftError
from .ladder_wh import estimate_wh, psi_LR
from .simulator import SimConfig, estimate_survival, estimate_transforms
from .transforms import SWEEP_COLUMNS, phi00, sweep, sweep_rows
from .validation import Settings, run_validation

log = logging.getLogger("mutualcover")

OUT_ENV = "MUTUALCOVER_OUT"

REFERENCE_CONFIG = {
    "model": {
        "line1": {"premium": 1.0, "claim_rate": 0.5, "claims": {"type": "deterministic", "value": 1.0}},
        "line2": {"premium": 1.0, "claim_rate": 0.9, "claims": {"type": "deterministic", "value": 1.0}},
        "r1": 1.1,
        "r2": 1.1,
    },
    "sweep": {"uv": [[0.0, 0.0]], "s1": [float(k) for k in range(1, 11)], "s2": [1.0],
              "overlay": True},
}


# --- output helpers -----------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (complex, np.complexfloating)):
        return repr(complex(x))
    return str(x)


def write_csv(path: Path, cfg: ExperimentConfig, columns: Sequence[str], rows: Iterable[Sequence],
              extra: Optional[dict] = None) -> Path:
    """CSV with ``#`` metadata lines, then the header row, then data."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# mutualcover {__version__}\n")
        fh.write(f"# config_hash={cfg.digest()}\n")
        fh.write(f"# seed={cfg.sim.seed}\n")
        for k, v in (extra or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or cfg.output.directory)


def _sim_config(cfg: ExperimentConfig) -> SimConfig:
    return SimConfig(t_max=cfg.sim.t_max, n_paths=cfg.sim.n_paths, seed=cfg.sim.seed,
                     workers=cfg.sim.workers)


def _load(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = parse_config(REFERENCE_CONFIG, "<built-in reference>")
    upd = {}
    if args.seed is not None:
        upd["seed"] = args.seed
    if args.workers is not None:
        upd["workers"] = args.workers
    if upd:
        cfg = cfg.model_copy(update={"sim": cfg.sim.model_copy(update=upd)})
    return cfg


# --- subcommands ----------------------------------------------------------------------

def cmd_simulate(cfg: ExperimentConfig, out: Path) -> List[Path]:
    model = cfg.model.build()
    sc = _sim_config(cfg)
    rows = []
    for u, v in cfg.sweep.uv:
        est = estimate_survival(model, u, v, sc)
        rows.append((u, v, est.value, est.std_error, est.n, sc.t_max))
    files = [write_csv(out / "survival.csv", cfg, ("u", "v", "estimate", "se", "n", "t_max"), rows)]
    srows = []
    for s1, s2 in cfg.sweep.s_points:
        fh = estimate_transforms(model, s1, s2, sc)[0]
        srows.append((s1, s2, fh.value, fh.std_error, fh.n, sc.t_max))
    if srows:
        files.append(write_csv(out / "transforms_sim.csv", cfg,
                               ("s1", "s2", "estimate", "se", "n", "t_max"), srows))
    return files


def _factors(cfg: ExperimentConfig):
    model = cfg.model.build()
    f = estimate_wh(model, cfg.wh.n, cfg.sim.seed, cfg.sim.workers, cfg.wh.cutoff_claims)
    return model, f


GNUPLOT_WH = """set datafile separator ','
set datafile commentschars '#'
set key autotitle columnhead
set xlabel 'w'
plot for [c in "2 4 6 8"] '{csv}' using 1:int(c) with lines
"""


def cmd_wh(cfg: ExperimentConfig, out: Path) -> List[Path]:
    model, f = _factors(cfg)
    ws = np.linspace(0.0, cfg.wh.w_max, cfg.wh.n_w)
    rows = []
    for w in ws:
        rows.append((w, f.plus("R", w), f.plus_se("R", w), f.plus("L", w), f.plus_se("L", w),
                     f.minus("L", -w), f.minus_se("L", -w), f.minus("R", -w), f.minus_se("R", -w)))
    cols = ("w", "psi_R_plus", "se_R_plus", "psi_L_plus", "se_L_plus",
            "psi_L_minus_neg", "se_L_minus_neg", "psi_R_minus_neg", "se_R_minus_neg")
    meta = {"n": cfg.wh.n, "p_L": f.p["L"], "p_R": f.p["R"]}
    files = [write_csv(out / "wh_curves.csv", cfg, cols, rows, meta)]
    irows = []
    for side in "LR":
        p = f.p[side]
        for y in ws[1:]:
            w = 1j * y
            prod, se = f.wh_product(side, w)
            res = prod - p / (p - psi_LR(model, side, w))
            irows.append((side, y, res.real, res.imag, se, abs(res) / se))
    files.append(write_csv(out / "wh_identity.csv", cfg,
                           ("process", "w_imag", "residual_re", "residual_im", "se", "z"), irows, meta))
    samples = []
    for side in "LR":
        samples += [(side, "sup", x) for x in f.sup[side]]
        samples += [(side, "inf", x) for x in f.inf[side]]
    files.append(write_csv(out / "wh_samples.csv", cfg, ("process", "bound", "value"), samples, meta))
    if "gnuplot" in cfg.output.formats:
        gp = out / "wh_curves.gp"
        gp.write_text(GNUPLOT_WH.format(csv="wh_curves.csv"))
        files.append(gp)
    return files


def cmd_transform(cfg: ExperimentConfig, out: Path) -> List[Path]:
    model, f = _factors(cfg)
    values = sweep(model, f, cfg.sweep.s_points)
    rows = sweep_rows(values)
    cols = list(SWEEP_COLUMNS)
    if cfg.sweep.overlay:
        sc = _sim_config(cfg)
        cols += ["sim", "sim_se"]
        overlay = []
        for r in rows:
            est = estimate_transforms(model, r[0], r[1], sc)[0]
            overlay.append(r + (est.value, est.std_error))
        rows = overlay
    return [write_csv(out / "transform_sweep.csv", cfg, cols, rows, {"n_wh": cfg.wh.n})]


def cmd_phi00(cfg: ExperimentConfig, out: Path) -> List[Path]:
    model, f = _factors(cfg)
    p = phi00(model, f)
    sim = estimate_survival(model, 0.0, 0.0, _sim_config(cfg))
    rows = [("via_plus", p.via_plus, p.se_plus), ("via_minus", p.via_minus, p.se_minus),
            ("simulation", sim.value, sim.std_error)]
    return [write_csv(out / "phi00.csv", cfg, ("method", "estimate", "se"), rows)]


def cmd_validate(args) -> int:
    st = Settings(seed=args.seed if args.seed is not None else 42, workers=args.workers,
                  mutate_pl_sign=args.inject_fault == "pl-sign")
    report = run_validation(st, args.only)
    print(report.to_text())
    out = Path(args.out or os.environ.get(OUT_ENV) or "out")
    out.mkdir(parents=True, exist_ok=True)
    (out / "validation.json").write_text(report.to_json())
    (out / "validation.txt").write_text(report.to_text() + "\n")
    return 0 if report.passed else 1


def cmd_reproduce(cfg: ExperimentConfig, out: Path) -> List[Path]:
    files = cmd_wh(cfg, out) + cmd_phi00(cfg, out) + cmd_transform(cfg, out)
    return files


# --- argument parsing -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mutualcover",
                                 description="Survival of two insurers with mutual deficit coverage")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", metavar="PATH", help="experiment YAML (default: built-in reference)")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out", metavar="DIR", help=f"output directory (env {OUT_ENV})")

    common(sub.add_parser("simulate", help="direct Monte-Carlo survival estimates"))
    common(sub.add_parser("wh", help="Wiener-Hopf factor samples and curves"))
    common(sub.add_parser("transform", help="analytic F_hat sweep with optional simulation overlay"))
    common(sub.add_parser("reproduce-paper", help="factor curves, phi(0,0) triple and the s1 sweep"))
    v = sub.add_parser("validate", help="run every acceptance check")
    common(v, config=False)
    v.add_argument("--only", nargs="+", metavar="CHECK")
    v.add_argument("--inject-fault", choices=["pl-sign"], help=argparse.SUPPRESS)
    return ap


COMMANDS = {"simulate": cmd_simulate, "wh": cmd_wh, "transform": cmd_transform,
            "reproduce-paper": cmd_reproduce}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            return cmd_validate(args)
        cfg = _load(args)
        out = _out_dir(args, cfg)
        for path in COMMANDS[args.command](cfg, out):
            print(path)
        return 0
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (NetProfitError, UnsupportedDriftError, PreconditionError) as err:
        print(f"error: {err}", file=sys.stderr)
        if isinstance(err, UnsupportedDriftError):
            print("  Monte-Carlo factors need both lines to have positive drift; the ladder "
                  "process of a line with mu <= 0 is not compound Poisson.", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
