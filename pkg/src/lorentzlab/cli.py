"""Command line front end.

    lorentzlab check-weight   --w power:0.5 --class bstar
    lorentzlab probe-operator --T H --u power:5 --w power:0 --p 2
    lorentzlab verify-theorem --u power:5 --w power:0 --p 2
    lorentzlab lpq            --u power:0.5 --p 2 --q 0.5
    lorentzlab emit-plot      --report out.json

Exit status: 0 when verdicts are consistent, 2 on a red flag, 1 on a
usage or config error.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import probes, report, weights
from .fncore import parse_weight
from .verdict import DEFAULT_GROWTH_FACTOR

CLASSES_W = ("delta2", "quasiconcave", "bp", "bpinf", "bstar", "wbar")
CLASSES_U = ("ap", "a1", "ainfty", "cp")
CLASSES_UW = ("joint", "multi")

CSV_HELP = ("CSV columns: source (record the series belongs to), family (test family or class), "
            "scale (dyadic exponent or count), value (per-scale estimate).")


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    u: str = "power:0"
    w: str = "power:0"
    p: float = 2.0
    q: float | None = None
    L: float = 2.0 ** 12
    n: int = 2 ** 12
    K: int = 12
    seed: int = 0
    growth_factor: float = DEFAULT_GROWTH_FACTOR
    options: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not (isinstance(self.p, (int, float)) and self.p > 0 and math.isfinite(self.p)):
            raise ConfigError(f"field 'p': must be a positive number, got {self.p!r}")
        if self.q is not None and not self.q > 0:
            raise ConfigError(f"field 'q': must be positive, got {self.q!r}")
        if int(self.n) != self.n or self.n < 2 or (int(self.n) & (int(self.n) - 1)):
            raise ConfigError(f"field 'n': must be a power of two, got {self.n!r}")
        if int(self.K) != self.K or self.K < 3:
            raise ConfigError(f"field 'K': must be an integer >= 3 (the growth rule needs three scales), got {self.K!r}")
        if not self.L > 0:
            raise ConfigError(f"field 'L': must be positive, got {self.L!r}")
        if not self.growth_factor > 1:
            raise ConfigError(f"field 'growth_factor': must exceed 1, got {self.growth_factor!r}")
        for name in ("u", "w"):
            try:
                parse_weight(getattr(self, name))
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"field '{name}': {exc}") from None

    def weight(self, name: str):
        return parse_weight(getattr(self, name))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["options"] = dict(sorted(d["options"].items()))
        return d


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _common(sp):
    sp.add_argument("--config", help="JSON file with any of the fields below")
    sp.add_argument("--u", help="weight on the line: JSON or power:a, rational:c, const")
    sp.add_argument("--w", help="weight on the half line, same syntax")
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--L", type=float, help="window half-width (default 2^12)")
    sp.add_argument("--n", type=int, help="resolution of uniform grids, power of two (default 2^12)")
    sp.add_argument("--K", type=int, help="scale depth (default 12)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--growth-factor", dest="growth_factor", type=float)
    sp.add_argument("--out", help="report JSON path")
    sp.add_argument("--csv", help="per-scale CSV path")
    sp.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lorentzlab", description="Weight classes and weak-type probes for H, H* and M.",
                 epilog=CSV_HELP)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sp = sub.add_parser("check-weight", help="certify a weight class", epilog=CSV_HELP)
    _common(sp)
    sp.add_argument("--class", dest="cls", required=True, choices=CLASSES_W + CLASSES_U + CLASSES_UW)
    sp = sub.add_parser("probe-operator", help="weak-type probe", epilog=CSV_HELP)
    _common(sp)
    sp.add_argument("--T", default="H", choices=probes.OPERATORS)
    sp.add_argument("--families", default=",".join(probes.FAMILIES),
                    help="comma-separated family ids (default: all)")
    sp = sub.add_parser("verify-theorem", help="consistency harness for H, H* and the three conditions",
                        epilog=CSV_HELP)
    _common(sp)
    sp.add_argument("--verdicts", help="JSON file of verdict strings to check instead of computing them")
    sp = sub.add_parser("lpq", help="Lorentz L^{p,q}(u) specialization", epilog=CSV_HELP)
    _common(sp)
    sp = sub.add_parser("emit-plot", help="CSV series and a PNG figure from a report")
    sp.add_argument("--report", required=True)
    sp.add_argument("--out-dir", help="directory for the CSV and PNG (default: next to the report)")
    return ap


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    text, from_file = "", set()
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"config file: {exc}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file: top level must be an object")
        for k, v in data.items():
            if k in ("u", "w") and isinstance(v, dict):
                v = json.dumps(v, sort_keys=True)
            if k == "growth-factor":
                k = "growth_factor"
            if not hasattr(cfg, k):
                raise ConfigError(f"config file: unknown field {k!r}")
            setattr(cfg, k, v)
            from_file.add(k)
    for k in ("u", "w", "p", "q", "L", "n", "K", "seed", "growth_factor"):
        v = getattr(args, k, None)
        if v is not None:
            setattr(cfg, k, v)
            from_file.discard(k)
    try:
        cfg.validate()
    except ConfigError as exc:
        m = re.match(r"field '(\w+)'", str(exc))
        if m and m.group(1) in from_file:
            line = _field_line(text, m.group(1))
            raise ConfigError(f"config file line {line}: {exc}") from None
        raise
    return cfg


def _field_line(text: str, name: str) -> int:
    keys = (name, name.replace("_", "-"))
    for i, row in enumerate(text.splitlines(), 1):
        if any(f'"{k}"' in row for k in keys):
            return i
    return 0


def _check_weight(cfg: ExperimentConfig, cls: str):
    u, w = cfg.weight("u"), cfg.weight("w")
    K, gf, p = cfg.K, cfg.growth_factor, cfg.p
    table = {
        "delta2": lambda: weights.delta2_constant(w, K, gf),
        "quasiconcave": lambda: weights.p_quasiconcave(w, p, K, gf),
        "bp": lambda: weights.bp_constant(w, p, K, gf),
        "bpinf": lambda: weights.bp_infty_verdict(w, p, K, seed=cfg.seed, growth_factor=gf),
        "bstar": lambda: weights.bstar_infty_constant(w, K, gf),
        "wbar": lambda: weights.wbar_battery(w, p, K, gf),
        "ap": lambda: weights.ap_constant(u, p, K, growth_factor=gf),
        "a1": lambda: weights.a1_constant(u, K, gf),
        "ainfty": lambda: weights.ainfty_estimate(u, K, growth_factor=gf),
        "cp": lambda: probes.cp_interval_test(u, K, gf),
        "joint": lambda: weights.joint_ab_condition(u, w, K, growth_factor=gf),
        "multi": lambda: weights.multi_interval_condition(u, w, p, K=K, seed=cfg.seed, growth_factor=gf),
    }
    try:
        res = table[cls]()
    except ValueError as exc:
        raise ConfigError(f"class {cls}: {exc}") from None
    return res.to_dict(), res.verdict, []


VERDICT_KEYS = ("i", "ii", "iii", "H", "H*")
VERDICT_VALUES = ("PASS", "FAIL", "FAIL-GROWTH", "INCONCLUSIVE")


def _check_verdicts(given) -> None:
    if not isinstance(given, dict):
        raise ConfigError("verdicts file: top level must be an object")
    for k, v in given.items():
        if k not in VERDICT_KEYS:
            raise ConfigError(f"verdicts file: field {k!r} is not one of {VERDICT_KEYS}")
        if v not in VERDICT_VALUES:
            raise ConfigError(f"verdicts file: field {k!r}: unknown verdict {v!r}")


def _summary(name: str, verdict: str, extra: str = "") -> str:
    return f"{name}: {verdict}{(' ' + extra) if extra else ''}"


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "emit-plot":
            return _emit_plot(args)
        cfg = load_config(args)
        flags: list = []
        if args.command == "check-weight":
            cfg.options = {"class": args.cls}
            result, verdict, flags = _check_weight(cfg, args.cls)
            extra = f"constant {result.get('constant')}" if "constant" in result else ""
            line = _summary(args.cls, verdict, extra)
        elif args.command == "probe-operator":
            fams = tuple(f for f in args.families.split(",") if f)
            bad = [f for f in fams if f not in probes.FAMILIES]
            if bad:
                raise ConfigError(f"field 'families': unknown ids {bad}")
            cfg.options = {"T": args.T, "families": list(fams)}
            est = probes.probe_operator(args.T, cfg.weight("u"), cfg.weight("w"), cfg.p, fams, cfg.seed,
                                        cfg.K, cfg.L, cfg.growth_factor)
            result = est.to_dict()
            line = _summary(args.T, est.verdict, f"max ratio {est.max_ratio:.6g}")
        elif args.command == "verify-theorem":
            if args.verdicts:
                cfg.options = {"verdicts": args.verdicts}
                try:
                    given = json.loads(Path(args.verdicts).read_text())
                except (OSError, json.JSONDecodeError) as exc:
                    raise ConfigError(f"verdicts file: {exc}") from None
                _check_verdicts(given)
                flags, notices = probes.consistency_flags(given)
                result = {"verdicts": given, "red_flags": flags, "notices": notices, "consistent": not flags}
            else:
                u, w = cfg.weight("u"), cfg.weight("w")
                result = probes.theorem11_harness(u, w, cfg.p, cfg.K, cfg.seed, cfg.L, cfg.growth_factor)
                nb = probes.necessary_battery(u, w, cfg.p, cfg.K, cfg.seed, cfg.growth_factor,
                                              h_verdict=result["verdicts"]["H"])
                result["necessary"] = nb
                result["cotlar_residual"] = _cotlar(cfg.n)
                flags = result["red_flags"] + nb["red_flags"]
            line = _summary("verify-theorem", "consistent" if not flags else "RED FLAG",
                            json.dumps(result["verdicts"], sort_keys=True))
        elif args.command == "lpq":
            if cfg.q is None:
                raise ConfigError("field 'q': required for lpq")
            result = probes.lpq_specialization(cfg.weight("u"), cfg.p, cfg.q, cfg.K, cfg.seed, cfg.L,
                                               cfg.growth_factor)
            flags = result["red_flags"]
            line = _summary(f"lpq case {result['case']}", result["H_verdict"],
                            f"condition {result['condition_verdict']}")
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"lorentzlab: error: {exc}", file=sys.stderr)
        return 1
    rep = report.build_report(args.command, cfg.to_dict(), result, timestamp=not args.no_timestamp)
    if args.out:
        report.write_report(args.out, rep)
    if args.csv:
        report.write_csv(args.csv, report.series_rows(result))
    print(line)
    for f in flags:
        print("red flag:", json.dumps(f, sort_keys=True))
    return 2 if flags else 0


def _cotlar(n: int) -> float:
    from .operators import bump, cotlar_residual, sample_midpoints

    # n cells on the support [-1, 1], zero-padded to [-4, 4] so the FFT path applies
    return cotlar_residual(sample_midpoints(bump, -4.0, 4.0, 4 * n))


def _emit_plot(args) -> int:
    from .plotting import plot_series

    src = Path(args.report)
    try:
        rep = json.loads(src.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"report: {exc}") from None
    out = Path(args.out_dir) if args.out_dir else src.parent
    out.mkdir(parents=True, exist_ok=True)
    rows = report.series_rows(rep.get("result", rep))
    csv_path, png_path = out / (src.stem + ".csv"), out / (src.stem + ".png")
    report.write_csv(csv_path, rows)
    n = plot_series(rows, png_path, title=rep.get("command", ""))
    print(f"wrote {csv_path} ({len(rows)} rows) and {png_path} ({n} series)")
    return 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
