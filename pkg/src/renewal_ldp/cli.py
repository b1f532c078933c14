"""Command-line interface: ``renewal-ldp <subcommand> [options]``.

Every subcommand writes one report (header block plus data table) as CSV
or JSON. Options may also come from ``--config file.toml`` whose keys
mirror the long flags (dashes or underscores); flags win on conflict.

Exit codes: 0 success, 2 configuration error, 3 some rows failed, 4 all
rows failed.
"""

import argparse
import math
import sys

import numpy as np

from . import __version__
from .asymptotics import prefactor, tail_auto
from .errors import ConfigurationError, RenewalLDPError
from .marginals import parse_marginal
from .models import DESCRIPTIONS, KernelMeasure, default_instances
from .modelspec import load_toml, resolve_model
from .rate import evaluate, solve_h, solve_tau
from .renewal import Grid, empirical_renewal_density, mgf_profile, renewal_density_oracle
from .report import Report
from .simulate import estimate_tail_crude, estimate_tail_tilted

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_FAIL = 0, 2, 3, 4

# defaults are applied after merging the config file, so that
# "was this flag given?" is simply "is it not None?"
DEFAULTS = {
    "format": "csv",
    "out": None,
    "seed": 12345,
    "n": 100_000,
    "x": "10,20,40",
    "regime": "auto",
    "shift": None,
    "workers": 1,
    "step": 0.01,
    "x_max": 60.0,
    "tier": "auto",
    "method": "tilted",
    "target": "W",
    "width": 1.0,
    "windows": "1,2,4,8",
    "law": "exp:rate=1",
    "form": "auto",
}


# ---------------------------------------------------------------------------
# argument parsing helpers
# ---------------------------------------------------------------------------


def parse_grid(text):
    """``a:b:n`` -> ``n`` evenly spaced values; ``v1,v2,...`` -> the list."""
    text = str(text).strip()
    try:
        if ":" in text:
            a, b, n = text.split(":")
            a, b, n = float(a), float(b), int(n)
            if n < 1:
                raise ValueError
            if n > 1 and not b > a:
                raise ConfigurationError(f"grid {text!r} must have b > a")
            return [float(v) for v in np.linspace(a, b, n)]
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"cannot parse grid {text!r}; use a:b:n or v1,v2,...") from None
    if not vals:
        raise ConfigurationError("empty grid")
    return vals


def _positive(name, values):
    for v in values:
        if not (v > 0 and math.isfinite(v)):
            raise ConfigurationError(f"{name} values must be positive and finite, got {v}")
    return values


def _shift(text):
    if text is None:
        return None
    try:
        a, b = (float(v) for v in str(text).split(","))
    except ValueError:
        raise ConfigurationError(f"--shift expects a,b; got {text!r}") from None
    return (a, b)


def _common(p, model=True):
    if model:
        p.add_argument("--model", help="model file (TOML) or inline spec kind:key=value;...")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--config", help="TOML file whose keys mirror the flags")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="renewal-ldp",
        description="Exact large-deviation tails for renewal reward processes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list-models", help="built-in models and their capability flags")
    _common(p, model=False)

    p = sub.add_parser("rate-table", help="h, h', h'' and h* over a t-grid")
    _common(p)
    p.add_argument("--t-grid", help="a:b:n or comma list")

    p = sub.add_parser("tail", help="tail approximations over (c, x)")
    _common(p)
    p.add_argument("--c-grid", help="a:b:n or comma list of slopes")
    p.add_argument("--x", help="comma list of levels")
    p.add_argument("--regime", choices=["auto", "lattice", "nonlattice", "first-passage"])
    p.add_argument("--shift", help="a,b for Pr{W(x+a) >= cx+b}")

    p = sub.add_parser("validate", help="approximation against exact, renewal or Monte Carlo oracles")
    _common(p)
    p.add_argument("--c-grid")
    p.add_argument("--x")
    p.add_argument("--regime", choices=["auto", "lattice", "nonlattice", "first-passage"])
    p.add_argument("--tier", choices=["auto", "exact", "renewal", "mc"])
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--step", type=float, help="renewal grid step (renewal tier)")

    p = sub.add_parser("simulate", help="crude or tilted Monte Carlo tail estimates")
    _common(p)
    p.add_argument("--c-grid")
    p.add_argument("--x")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--method", choices=["crude", "tilted"])
    p.add_argument("--target", choices=["W", "Wbar"])

    p = sub.add_parser("renewal-density", help="simulated renewal density on windows")
    _common(p)
    p.add_argument("--law", help="increment law, e.g. exp:rate=1 or gamma:shape=2,rate=1")
    p.add_argument("--t", type=float, help="with --model: use the tilted X-marginal at this t")
    p.add_argument("--windows", help="comma list of window centres")
    p.add_argument("--width", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("mgf-profile", help="renewal profile of E[exp(tW(x))] on a grid")
    _common(p)
    p.add_argument("--t", type=float)
    p.add_argument("--x-max", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--form", choices=["auto", "normalized", "raw"])
    p.add_argument("--first-passage", action="store_true", default=None)
    return parser


def resolve_config(parser, args):
    """Merge ``--config`` into ``args`` (flags win) and apply defaults."""
    cfg = vars(args).copy()
    path = cfg.pop("config", None)
    known = set(cfg) - {"command"}
    if path:
        doc = load_toml(path)
        for key, value in doc.items():
            k = key.replace("-", "_")
            if k == "model" and isinstance(value, dict):
                value = dict(value)
            if k not in known:
                raise ConfigurationError(f"unknown configuration key {key!r} for {args.command}")
            if cfg.get(k) is None:
                cfg[k] = value
    for key, value in DEFAULTS.items():
        if key in known and cfg.get(key) is None:
            cfg[key] = value
    return cfg


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _law(cfg):
    if cfg.get("model") is None:
        raise ConfigurationError("--model is required")
    return resolve_model(cfg["model"])


def _row_error(row, exc):
    row["status"] = f"error: {type(exc).__name__}: {exc}"
    return row


def cmd_list_models(cfg):
    cols = ["kind", "description", "x_nonneg", "y_span", "y_mgf_finite", "beta_x", "t_lo", "t_hi", "closed_form_rate"]
    rows = []
    for law in default_instances():
        cap = law.capabilities()
        rows.append(
            {
                "kind": law.kind,
                "description": DESCRIPTIONS[law.kind],
                "x_nonneg": cap["x_nonneg"],
                "y_span": cap["y_span"],
                "y_mgf_finite": cap["y_mgf_finite"],
                "beta_x": cap["beta_x"],
                "t_lo": cap["t_range"][0],
                "t_hi": cap["t_range"][1],
                "closed_form_rate": cap["closed_form_rate"],
            }
        )
    return Report("list-models", cfg, cols, rows)


def cmd_rate_table(cfg):
    law, doc = _law(cfg)
    ts = parse_grid(cfg.get("t_grid") or "0:1:5")
    cols = ["t", "h", "h1", "h2", "hstar", "residual", "status"]
    rows = []
    for t in ts:
        row = {"t": t}
        try:
            r = evaluate(law, t)
            row.update(h=r.h, h1=r.h1, h2=r.h2, hstar=r.hstar, residual=r.residual, status="ok")
        except (RenewalLDPError, ArithmeticError, ValueError) as exc:
            _row_error(row, exc)
        rows.append(row)
    return Report("rate-table", {**cfg, "model": doc}, cols, rows)


def cmd_tail(cfg):
    law, doc = _law(cfg)
    cs = parse_grid(cfg.get("c_grid") or "2")
    xs = _positive("x", parse_grid(cfg["x"]))
    shift = _shift(cfg.get("shift"))
    cols = ["c", "x", "regime", "tau", "hstar", "log_prob", "prob", "prefactor", "lattice_correction", "shift_factor", "status"]
    rows = []
    for c in cs:
        for x in xs:
            row = {"c": c, "x": x}
            try:
                a = tail_auto(law, c, x, regime=cfg["regime"], shift=shift)
                row.update(a.as_row())
                row["shift_factor"] = math.exp(a.components["shift"]) if "shift" in a.components else math.nan
                row["status"] = "ok"
            except (RenewalLDPError, ArithmeticError, ValueError) as exc:
                _row_error(row, exc)
            rows.append(row)
    return Report("tail", {**cfg, "model": doc}, cols, rows)


def _pick_tier(law, tier, regime):
    if tier != "auto":
        return tier
    fp = regime == "first-passage"
    return "exact" if law.kind == "poisson-epoch-unit" and not fp else "mc"


def cmd_validate(cfg):
    from .exact import unit_v_tail, unit_w_tail

    law, doc = _law(cfg)
    cs = parse_grid(cfg.get("c_grid") or "2")
    xs = _positive("x", parse_grid(cfg["x"]))
    regime = cfg["regime"]
    tier = _pick_tier(law, cfg["tier"], regime)
    cols = ["c", "x", "tier", "approx", "oracle", "ratio", "mc_stderr", "z", "v_over_w", "status"]
    rows = []
    for c in cs:
        for x in xs:
            row = {"c": c, "x": x, "tier": tier}
            try:
                if tier == "renewal":
                    tau = solve_tau(law, c)
                    h = solve_h(law, tau)
                    pref = prefactor(law, tau, h)
                    prof = mgf_profile(law, tau, Grid(x, float(cfg["step"])), h=h)
                    row.update(approx=pref.phi, oracle=prof.limit_estimate)
                else:
                    approx = tail_auto(law, c, x, regime=regime).prob
                    row["approx"] = approx
                    if tier == "exact":
                        if law.kind != "poisson-epoch-unit" or regime == "first-passage":
                            raise ConfigurationError("tier unavailable: the exact oracle covers poisson-epoch-unit W only")
                        w = unit_w_tail(x, c)
                        row.update(oracle=w, v_over_w=unit_v_tail(x, c) / w)
                    elif tier == "mc":
                        target = "Wbar" if regime == "first-passage" else "W"
                        est = estimate_tail_tilted(law, c, x, cfg["n"], cfg["seed"], target=target, workers=cfg["workers"])
                        row.update(oracle=est.p_hat, mc_stderr=est.stderr, z=(approx - est.p_hat) / est.stderr)
                    else:
                        raise ConfigurationError(f"tier unavailable: {tier}")
                row["ratio"] = row["approx"] / row["oracle"]
                row["status"] = "ok"
            except (RenewalLDPError, ArithmeticError, ValueError) as exc:
                _row_error(row, exc)
            rows.append(row)
    summary = {"uniformity": _uniformity(rows, xs)}
    return Report("validate", {**cfg, "model": doc}, cols, rows, summary, seed=cfg["seed"])


def _uniformity(rows, xs):
    """``max_c |ratio - 1|`` per ``x`` over the successful rows."""
    out = []
    for x in xs:
        devs = [abs(r["ratio"] - 1.0) for r in rows if r["x"] == x and r.get("status") == "ok"]
        out.append({"x": x, "max_abs_ratio_minus_1": max(devs) if devs else math.nan, "n_c": len(devs)})
    return out


def cmd_simulate(cfg):
    law, doc = _law(cfg)
    cs = parse_grid(cfg.get("c_grid") or "2")
    xs = _positive("x", parse_grid(cfg["x"]))
    n = int(cfg["n"])
    if n < 2:
        raise ConfigurationError("--n must be at least 2")
    cols = ["c", "x", "method", "target", "p_hat", "stderr", "rel_stderr", "hits", "n", "tau", "weight_mean", "weight_stderr", "status"]
    rows = []
    for c in cs:
        for x in xs:
            row = {"c": c, "x": x}
            try:
                if cfg["method"] == "crude":
                    est = estimate_tail_crude(law, c, x, n, cfg["seed"], cfg["target"], cfg["workers"])
                else:
                    est = estimate_tail_tilted(law, c, x, n, cfg["seed"], cfg["target"], cfg["workers"])
                row.update(est.as_row())
                row.update(weight_mean=est.weight_mean, weight_stderr=est.weight_stderr, status="ok")
            except (RenewalLDPError, ArithmeticError, ValueError) as exc:
                _row_error(row, exc)
            rows.append(row)
    return Report("simulate", {**cfg, "model": doc}, cols, rows, seed=cfg["seed"])


def cmd_renewal_density(cfg):
    if cfg.get("model") is not None:
        law, doc = _law(cfg)
        t = float(cfg.get("t") or 0.0)
        p = KernelMeasure(law, t, -solve_h(law, t))
        label = {"model": doc, "t": t}
    else:
        try:
            p = parse_marginal(cfg["law"])
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        label = {"law": p.spec()}
    windows = _positive("windows", parse_grid(cfg["windows"]))
    width = float(cfg["width"])
    diag = empirical_renewal_density(p, windows, width, int(cfg["n"]), int(cfg["seed"]), workers=int(cfg["workers"]))
    oracle = renewal_density_oracle(p, diag.centers - width / 2, diag.centers + width / 2)
    cols = ["center", "q_hat", "stderr", "target", "z_target", "oracle", "z_oracle", "status"]
    rows = []
    for i, x in enumerate(diag.centers):
        orc = math.nan if oracle is None else float(oracle[i])
        rows.append(
            {
                "center": x,
                "q_hat": diag.q_estimates[i],
                "stderr": diag.stderrs[i],
                "target": diag.target,
                "z_target": (diag.q_estimates[i] - diag.target) / diag.stderrs[i],
                "oracle": orc,
                "z_oracle": (diag.q_estimates[i] - orc) / diag.stderrs[i],
                "status": "ok",
            }
        )
    return Report("renewal-density", {**cfg, **label}, cols, rows, seed=cfg["seed"])


def cmd_mgf_profile(cfg):
    law, doc = _law(cfg)
    t = float(cfg.get("t") or 0.0)
    grid = Grid(float(cfg["x_max"]), float(cfg["step"]))
    prof = mgf_profile(law, t, grid, form=cfg["form"], first_passage=bool(cfg.get("first_passage")))
    cols = ["x", "value", "normalized_value"]
    rows = [
        {"x": x, "value": raw, "normalized_value": v}
        for x, raw, v in zip(prof.x, prof.unnormalized, prof.values)
    ]
    summary = {
        "limit_estimate": prof.limit_estimate,
        "decay_rate_estimate": prof.decay_rate_estimate,
        "residual": prof.residual,
        "form": prof.form,
        "scale_rate": prof.scale_rate,
        "closed_form_prefactor": law.closed_form_prefactor(t),
    }
    return Report("mgf-profile", {**cfg, "model": doc}, cols, rows, summary)


COMMANDS = {
    "list-models": cmd_list_models,
    "rate-table": cmd_rate_table,
    "tail": cmd_tail,
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "renewal-density": cmd_renewal_density,
    "mgf-profile": cmd_mgf_profile,
}


def run(argv=None):
    """Parse ``argv`` and return ``(report, exit_code)``; errors raise."""
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = resolve_config(parser, args)
    report = COMMANDS[args.command](cfg)
    return report, report.exit_code()


def main(argv=None):
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        cfg = resolve_config(parser, args)
        report = COMMANDS[args.command](cfg)
    except ConfigurationError as exc:
        print(f"renewal-ldp: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RenewalLDPError as exc:
        print(f"renewal-ldp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = report.render(cfg["format"])
    if cfg.get("out"):
        with open(cfg["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return report.exit_code()


if __name__ == "__main__":
    sys.exit(main())
