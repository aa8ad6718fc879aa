"""Command-line front end: simulate paths, detect change points in CSV
series, and run Monte Carlo replications.

Exit codes: 0 success, 2 validation error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys

import numpy as np

from .errors import NumericError, ValidationError
from .estimate import QUADRATURE_META
from .pipeline import analyze, default_params, run_montecarlo, summarize
from .synth import Family, PiecewiseSpec, SampledPath, simulate_piecewise

__all__ = ["main", "build_parser"]

SCHEMA = "scalebreak/1"


def config_hash(config):
    payload = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(payload).hexdigest()[:12]


def _spec_from_config(cfg):
    return PiecewiseSpec(
        family=cfg["family"],
        tau_stars=tuple(cfg.get("tau", ())),
        exponents=tuple(cfg["exponents"]),
        sigmas=tuple(cfg.get("sigmas") or [1.0] * len(cfg["exponents"])),
        freq_band=tuple(cfg["band"]) if cfg.get("band") else None,
    )


def _params_from_config(cfg, spread=None):
    return default_params(
        cfg["family"],
        cfg["n"],
        m=cfg.get("m", 0),
        delta=cfg.get("delta", 1.0),
        ell=cfg.get("ell"),
        kappa=cfg.get("kappa", 0.05),
        q=cfg.get("q", 3),
        a_base=cfg.get("a_base"),
        v_n=cfg.get("v_n"),
        min_len=cfg.get("min_len"),
        stride=cfg.get("stride"),
        exponent_spread=spread,
        freq_band=tuple(cfg["band"]) if cfg.get("band") else None,
        wavelet_band=tuple(cfg.get("wavelet_band", (2.0, 3.0))),
        trim=cfg.get("trim", 0.1),
        min_det_scale=cfg.get("min_det_scale"),
        profile=cfg.get("profile", "tuned"),
    )


def _exponent_spread(cfg):
    exps = cfg.get("exponents")
    if exps and len(exps) > 1:
        return max(exps) - min(exps)
    return None


def read_series_csv(path_name):
    """One value per line, or two columns (t, x) with uniform spacing.

    The two-column form sets the sampling step from the time column; a
    non-numeric cell is reported with its row and column.
    """
    rows = []
    with open(path_name, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if lineno == 1 and any(_non_numeric(c) for c in row):
                continue  # header
            parsed = []
            for colno, cell in enumerate(row, start=1):
                cell = cell.strip()
                if cell == "":
                    continue
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValidationError(
                        f"non-numeric value {cell!r} at row {lineno}, column {colno}"
                    ) from None
            if parsed:
                rows.append(parsed)
    if not rows:
        raise ValidationError("input CSV holds no data rows")
    widths = {len(r) for r in rows}
    if widths == {1}:
        return SampledPath(values=np.array([r[0] for r in rows]), delta=1.0)
    if widths == {2}:
        t = np.array([r[0] for r in rows])
        x = np.array([r[1] for r in rows])
        steps = np.diff(t)
        if steps.size == 0 or steps[0] <= 0:
            raise ValidationError("time column must be increasing")
        if np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]):
            raise ValidationError("time column is not uniformly spaced")
        return SampledPath(values=x, delta=float(steps[0]))
    raise ValidationError("rows must have one value or two columns (t, x)")


def _non_numeric(cell):
    try:
        float(cell)
        return False
    except ValueError:
        return True


def _write_series_csv(fname, path, header_lines):
    with open(fname, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        for v in path.values:
            fh.write(format(float(v), ".17g") + "\n")


def cmd_simulate(cfg):
    spec = _spec_from_config(cfg)
    chash = config_hash(cfg)
    path = simulate_piecewise(spec, cfg["n"], delta=cfg.get("delta", 1.0), seed=cfg["seed"])
    out = cfg["out"]
    _write_series_csv(out, path, [f"config_hash={chash}", f"seed={cfg['seed']}"])
    meta = {
        "schema": SCHEMA,
        "command": "simulate",
        "config_hash": chash,
        "seed": cfg["seed"],
        "config": cfg,
        "delta": path.delta,
        "n": path.n,
    }
    with open(out + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
    print(f"wrote {out} ({path.n + 1} rows) and {out}.meta.json")
    return 0


def _segment_dict(fit, ci_level):
    seg = {
        "k_lo": fit.k_lo,
        "k_hi": fit.k_hi,
        "alpha_ols": fit.ols.alpha,
        "log_beta_ols": fit.ols.log_beta,
        "exponent_ols": fit.exponent_ols,
        "ci_level": ci_level,
        "ci_alpha": list(fit.ci_alpha) if fit.ci_alpha else None,
        "n_eff": fit.ols.n_eff,
    }
    if fit.fgls is not None:
        seg.update(
            alpha_fgls=fit.fgls.alpha,
            log_beta_fgls=fit.fgls.log_beta,
            exponent_fgls=fit.exponent_fgls,
            fgls_fallback=fit.fgls.fallback_to_ols,
            gof_stat=fit.gof.statistic,
            gof_df=fit.gof.df,
            gof_p=fit.gof.p_value,
        )
    return seg


def cmd_detect(cfg):
    path = read_series_csv(cfg["input"])
    if cfg.get("n") and cfg["n"] != path.n:
        raise ValidationError(
            f"config n={cfg['n']} but the input series has N={path.n}"
        )
    cfg = dict(cfg, n=path.n, delta=path.delta)
    chash = config_hash(cfg)
    params = _params_from_config(cfg, spread=_exponent_spread(cfg))
    report = analyze(path, params, ci_level=cfg.get("ci_level", 0.95))
    res = report.result
    out = cfg["out"]
    payload = {
        "schema": SCHEMA,
        "command": "detect",
        "config_hash": chash,
        "seed": cfg.get("seed"),
        "n": res.n,
        "delta": res.delta,
        "m": res.m,
        "k_hat": list(res.k_hat),
        "tau_hat": list(res.tau_hat),
        "g_min": res.g_min,
        "margin": report.margin,
        "margin_clamped": report.margin_clamped,
        "v_n": res.v_n,
        "quadrature": dict(QUADRATURE_META),
        "segments": [_segment_dict(f, cfg.get("ci_level", 0.95)) for f in report.segments],
    }
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    plot_name = out.rsplit(".", 1)[0] + "_scalogram.csv"
    with open(plot_name, "w", newline="") as fh:
        fh.write(f"# config_hash={chash} seed={cfg.get('seed')}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["segment", "scale_index", "log_scale", "log_variance", "fitted"]
        )
        for j, fit in enumerate(report.segments):
            lv = fit.logvar
            fitted = fit.ols.alpha * lv.log_scales + fit.ols.log_beta
            for i, (ls, y, fv) in enumerate(zip(lv.log_scales, lv.y, fitted), 1):
                writer.writerow(
                    [j, i] + [format(float(v), ".17g") for v in (ls, y, fv)]
                )
    print(f"wrote {out} and {plot_name}")
    print(f"tau_hat = {list(res.tau_hat)}")
    return 0


def cmd_montecarlo(cfg):
    spec = _spec_from_config(cfg)
    chash = config_hash(cfg)
    params = _params_from_config(cfg, spread=_exponent_spread(cfg))
    records = run_montecarlo(
        spec,
        cfg["n"],
        params,
        reps=cfg["reps"],
        seed=cfg["seed"],
        delta=cfg.get("delta", 1.0),
        with_fgls=cfg.get("fgls", False),
        workers=cfg.get("workers", 1),
    )
    summary = summarize(records, spec)
    out = cfg["out"]
    m = spec.m
    cols = [f"tau_{j + 1}" for j in range(m)]
    cols += [f"exp_{j}_ols" for j in range(m + 1)]
    if cfg.get("fgls"):
        cols += [f"exp_{j}_fgls" for j in range(m + 1)]
    with open(out, "w", newline="") as fh:
        fh.write(f"# config_hash={chash} seed={cfg['seed']}\n")
        writer = csv.writer(fh)
        writer.writerow(["rep", "seed"] + cols)
        for i, rec in enumerate(records):
            row = [i, rec["seed"]]
            row += [rec["tau_hat"][j] for j in range(m)]
            row += [rec["exponent_ols"][j] for j in range(m + 1)]
            if cfg.get("fgls"):
                row += [rec["exponent_fgls"][j] for j in range(m + 1)]
            writer.writerow(row)
        for stat in ("mean", "sigma_hat", "sqrt_mse"):
            writer.writerow(
                [stat, ""] + [summary[c][stat] for c in cols]
            )
    print(f"wrote {out} ({len(records)} replicates)")
    for c in cols:
        s = summary[c]
        print(
            f"{c}: mean={s['mean']:.4f} sigma_hat={s['sigma_hat']:.4f} "
            f"sqrt_mse={s['sqrt_mse']:.4f}"
        )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scalebreak",
        description="Change points in the scaling exponent of Gaussian series",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--family", choices=[f.value for f in Family])
        p.add_argument("--m", type=int)
        p.add_argument("--n", type=int)
        p.add_argument("--ell", type=int)
        p.add_argument("--kappa", type=float)
        p.add_argument("--wavelet", dest="q", type=int, metavar="Q",
                       help="vanishing moments of the compact wavelet")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--delta", type=float)
        p.add_argument("--tau", type=float, nargs="*")
        p.add_argument("--exponents", type=float, nargs="*")
        p.add_argument("--sigmas", type=float, nargs="*")
        p.add_argument("--band", type=float, nargs=2, metavar=("FMIN", "FMAX"))
        p.add_argument("--wavelet-band", dest="wavelet_band", type=float, nargs=2,
                       metavar=("LAM", "MU"))
        p.add_argument("--trim", type=float)
        p.add_argument("--a-base", dest="a_base", type=int)
        p.add_argument("--v-n", dest="v_n", type=float)
        p.add_argument("--min-len", dest="min_len", type=int)
        p.add_argument("--stride", type=int)
        p.add_argument("--ci-level", dest="ci_level", type=float)
        p.add_argument("--min-det-scale", dest="min_det_scale", type=int,
                       help="smallest detection scale (use >= trend degree"
                            " protection, e.g. 20, for trended data)")
        p.add_argument("--profile", choices=["tuned", "classic"])

    p_sim = sub.add_parser("simulate", help="simulate a piecewise path to CSV")
    add_common(p_sim)

    p_det = sub.add_parser("detect", help="detect change points in a CSV series")
    add_common(p_det)
    p_det.add_argument("--input", help="input CSV (one value/line or t,x)")

    p_mc = sub.add_parser("montecarlo", help="replicate simulate+detect")
    add_common(p_mc)
    p_mc.add_argument("--reps", type=int)
    p_mc.add_argument("--fgls", action="store_true", default=None)
    p_mc.add_argument("--workers", type=int)
    return parser


_DEFAULTS = {"seed": 0, "m": 0, "delta": 1.0, "reps": 10}
_REQUIRED = {
    "simulate": ("family", "n", "exponents", "out"),
    "detect": ("family", "input", "out"),
    "montecarlo": ("family", "n", "exponents", "out"),
}


def _merge_config(args):
    cfg = dict(_DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            cfg.update(json.load(fh))
    for key, val in vars(args).items():
        if key in ("config", "command") or val is None:
            continue
        cfg[key] = val
    missing = [k for k in _REQUIRED[args.command] if not cfg.get(k)]
    if missing:
        raise ValidationError(f"missing required options: {', '.join(missing)}")
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _merge_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "detect":
            return cmd_detect(cfg)
        return cmd_montecarlo(cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
