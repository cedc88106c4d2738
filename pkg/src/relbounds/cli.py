"""Channel-spec ingestion, bound-suite orchestration, and CSV emission.

The spec file format is line-oriented ``key = value`` with JSON values
(the tokens ``-inf``/``inf`` are accepted inside matrices). Rates are
written in the declared unit (bits by default); everything internal is
nats and the conversion back happens once, at emission.

Exit codes: 0 success, 2 validation failure, 3 output written but
precondition-void warnings were raised during computation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .classic import (
    capacity,
    e_ck,
    e_ex,
    e_lb_bsc,
    e_r,
    e_sp,
    straight_line_bound,
    _bsc_crossover,
)
from .genie import bsc_genie_bound, broadcast_alpha, AlphaFamily, default_wz_family, e_b, e_orth, genie_curve
from .optimize import OptimizerConfig
from .oracle import exact_pe, monte_carlo_pe, random_cc_code
from .probability import (
    ChannelKernel,
    DecodingMetric,
    ProbVec,
    ValidationError,
    is_balanced,
    ml_metric,
)

LOG2 = math.log(2.0)
ALL_BOUNDS = ("E_sp", "E_r", "E_ex", "E_CK", "E_sl_sp", "E_B", "E_bar_sym",
              "E_bar_search", "E_orth", "E_LB")


class SpecError(ValidationError):
    """Spec-file problem, with a line-precise message."""

    def __init__(self, line: int | None, message: str):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    w: ChannelKernel
    metric: DecodingMetric
    p: ProbVec
    rates_nats: np.ndarray
    rate_unit: str
    nz: int = 2
    alpha_grid: int = 17
    wz_grid: int = 9
    seed: int = 101
    restarts: int = 16
    raw: dict = field(default_factory=dict, compare=False)

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(restarts=self.restarts, rng_seed=self.seed)


def _parse_value(token: str, line: int):
    token = token.strip()
    if token and all(c.isalnum() or c == "_" for c in token) and token[0].isalpha():
        return token  # bare word: ML, bits, nats, ...
    subbed = token.replace('"-inf"', "-Infinity").replace("-inf", "-Infinity")
    try:
        return json.loads(subbed)
    except json.JSONDecodeError as exc:
        raise SpecError(line, f"cannot parse value: {exc.msg}") from None


def parse_spec(text: str) -> ChannelSpec:
    """Parse and validate a channel spec document."""
    fields: dict = {}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise SpecError(lineno, "expected 'key = value'")
        key, _, val = stripped.partition("=")
        key = key.strip()
        if key in fields:
            raise SpecError(lineno, f"duplicate key {key!r}")
        fields[key] = _parse_value(val, lineno)
        lines[key] = lineno

    def err(key, msg):
        raise SpecError(lines.get(key), msg)

    if "schema" in fields and fields["schema"] != 1:
        err("schema", f"unsupported schema {fields['schema']!r}")
    if "W" not in fields:
        raise SpecError(None, "missing required key 'W'")
    try:
        w = ChannelKernel(np.asarray(fields["W"], dtype=float))
    except (ValidationError, ValueError) as exc:
        err("W", f"invalid channel: {exc}")

    metric_val = fields.get("metric", "ML")
    if isinstance(metric_val, str):
        if metric_val.upper() != "ML":
            err("metric", f"unknown metric name {metric_val!r}")
        q = ml_metric(w)
    else:
        try:
            q = DecodingMetric(np.asarray(metric_val, dtype=float))
        except (ValidationError, ValueError) as exc:
            err("metric", f"invalid metric: {exc}")
        if q.shape != w.rows.shape:
            err("metric", "metric/channel shape mismatch")

    if "P" in fields:
        try:
            p = ProbVec(np.asarray(fields["P"], dtype=float))
        except (ValidationError, ValueError) as exc:
            err("P", f"invalid input law: {exc}")
        if p.size != w.nx:
            err("P", "input law does not match the channel input alphabet")
    else:
        p = ProbVec.uniform(w.nx)

    unit = fields.get("rate_unit", "bits")
    if unit not in ("bits", "nats"):
        err("rate_unit", f"rate_unit must be 'bits' or 'nats', got {unit!r}")
    rates_field = fields.get("rates")
    if rates_field is None:
        cap_nats = capacity(p, w)
        rates = np.linspace(0.05, 0.95, 19) * cap_nats
    elif isinstance(rates_field, dict):
        for k in ("start", "stop", "count"):
            if k not in rates_field:
                err("rates", f"rates object needs '{k}'")
        rates = np.linspace(rates_field["start"], rates_field["stop"],
                            int(rates_field["count"]))
        rates = rates * (LOG2 if unit == "bits" else 1.0)
    else:
        rates = np.asarray(rates_field, dtype=float) * (LOG2 if unit == "bits" else 1.0)
    if rates.size == 0 or np.any(rates <= 0) or np.any(np.diff(rates) <= 0):
        err("rates", "rates must be positive and strictly increasing")

    return ChannelSpec(
        w=w, metric=q, p=p, rates_nats=rates, rate_unit=unit,
        nz=int(fields.get("Z", 2)),
        alpha_grid=int(fields.get("alpha_grid", 17)),
        wz_grid=int(fields.get("wz_grid", 9)),
        seed=int(fields.get("seed", 101)),
        restarts=int(fields.get("restarts", 16)),
        raw=fields,
    )


@dataclass
class CurveTable:
    """Rate-indexed table of bound values with provenance."""

    unit: str
    rates: np.ndarray  # in `unit`
    columns: dict  # name -> np.ndarray in `unit`-consistent nats/bits
    provenance: dict = field(default_factory=dict)
    warnings_seen: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)

    def to_csv_text(self) -> str:
        out = []
        for k in sorted(self.provenance):
            out.append(f"# {k}={self.provenance[k]}")
        for w in self.warnings_seen:
            out.append(f"# warning={w}")
        for k in sorted(self.flags):
            out.append(f"# flag_{k}={self.flags[k]}")
        names = list(self.columns)
        out.append(",".join(["R"] + names))
        for i, r in enumerate(self.rates):
            row = [repr(float(r))] + [repr(float(self.columns[n][i])) for n in names]
            out.append(",".join(row))
        return "\n".join(out) + "\n"

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv_text())

    @staticmethod
    def from_csv_text(text: str) -> "CurveTable":
        provenance, warn, flags = {}, [], {}
        rows = []
        header = None
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, _, val = body.partition("=")
                if key == "warning":
                    warn.append(val)
                elif key.startswith("flag_"):
                    flags[key[5:]] = val
                else:
                    provenance[key] = val
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(tok) for tok in line.split(",")])
        if header is None or not rows:
            raise ValidationError("CurveTable.from_csv_text: no data rows")
        arr = np.array(rows)
        cols = {name: arr[:, j + 1] for j, name in enumerate(header[1:])}
        unit = provenance.get("unit", "bits")
        return CurveTable(unit=unit, rates=arr[:, 0], columns=cols,
                          provenance=provenance, warnings_seen=warn, flags=flags)


def _config_hash(spec: ChannelSpec, which) -> str:
    payload = json.dumps({
        "W": spec.w.rows.tolist(),
        "metric": spec.metric.scores.tolist(),
        "P": spec.p.weights.tolist(),
        "rates": spec.rates_nats.tolist(),
        "unit": spec.rate_unit,
        "nz": spec.nz, "alpha_grid": spec.alpha_grid, "wz_grid": spec.wz_grid,
        "seed": spec.seed, "restarts": spec.restarts,
        "which": sorted(which),
    }, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _worker_count() -> int:
    try:
        return max(int(os.environ.get("RELBOUNDS_WORKERS", "1")), 1)
    except ValueError:
        return 1


def _pmap(fn, items):
    """Order-preserving map, optionally threaded; reduction is ordered."""
    workers = _worker_count()
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_suite(spec: ChannelSpec, which=None) -> CurveTable:
    """Compute the requested bound curves on the spec's rate grid."""
    which = set(which) if which else set(ALL_BOUNDS)
    unknown = which - set(ALL_BOUNDS)
    if unknown:
        raise ValidationError(f"run_suite: unknown bound names {sorted(unknown)}")
    cfg = spec.optimizer_config()
    rates = spec.rates_nats
    p_bsc = _bsc_crossover(spec.w)
    is_bsc_ml = p_bsc is not None and spec.metric.is_ml
    caught: list = []
    columns: dict = {}

    def compute(name, fn):
        try:
            columns[name] = np.asarray(fn())
        except ValidationError as exc:
            raise ValidationError(f"{name}: {exc}") from exc

    with warnings.catch_warnings(record=True) as wrec:
        warnings.simplefilter("always")
        if "E_sp" in which:
            compute("E_sp", lambda: _pmap(lambda R: e_sp(R, spec.p, spec.w, cfg), rates))
        if "E_r" in which:
            compute("E_r", lambda: _pmap(
                lambda R: max(e_r(R, spec.p, spec.w, spec.metric, cfg), 0.0), rates))
        if "E_ex" in which:
            compute("E_ex", lambda: _pmap(
                lambda R: max(e_ex(R, spec.p, spec.w, spec.metric, cfg), 0.0), rates))
        if "E_CK" in which:
            compute("E_CK", lambda: _pmap(
                lambda R: max(e_ck(R, spec.p, spec.w, spec.metric, cfg), 0.0), rates))
        if "E_sl_sp" in which:
            compute("E_sl_sp",
                    lambda: straight_line_bound(spec.w, spec.metric, rates, cfg)[0].values)
        if "E_B" in which:
            compute("E_B", lambda: _pmap(
                lambda R: e_b(R, spec.p, spec.w, spec.metric, cfg, nz=spec.nz), rates))
        if "E_bar_sym" in which:
            if not is_bsc_ml:
                raise ValidationError(
                    "E_bar_sym: the closed symmetric form requires a BSC with the ML metric")
            fam = default_wz_family(spec.w, alpha_points=spec.alpha_grid,
                                    grid_points=spec.wz_grid)
            compute("E_bar_sym", lambda: bsc_genie_bound(rates, p_bsc, fam, cfg).values)
        if "E_bar_search" in which:
            if not is_balanced(spec.w, spec.metric):
                warnings.warn("E_bar_search: channel/metric pair is not balanced; "
                              "bound claim void", RuntimeWarning)

            def search():
                vals = np.full(rates.size, math.inf)
                for a in np.linspace(0.0, 1.0, spec.alpha_grid):
                    wyz = broadcast_alpha(AlphaFamily(alpha=float(a), base=spec.w))
                    evs = genie_curve(rates, spec.p, wyz, spec.metric, cfg)
                    vals = np.minimum(vals, [ev.value for ev in evs])
                return vals

            compute("E_bar_search", search)
        if "E_orth" in which:
            compute("E_orth", lambda: _pmap(
                lambda R: e_orth(R, spec.p, spec.w, spec.metric, cfg, nz=spec.nz), rates))
        if "E_LB" in which:
            if p_bsc is None or not spec.metric.is_ml:
                raise ValidationError("E_LB: defined for the BSC with the ML metric only")
            cap = capacity(spec.p, spec.w)
            compute("E_LB", lambda: [
                e_lb_bsc(R, p_bsc, cfg) if R < cap else 0.0 for R in rates])
        caught = [f"{w.category.__name__}: {w.message}" for w in wrec]

    flags = {}
    for name in ("E_sp", "E_sl_sp", "E_bar_sym", "E_bar_search"):
        if name in columns:
            v = columns[name]
            flags[f"{name}_nonincreasing"] = bool(np.all(v[1:] <= v[:-1] + 1e-9))
    if "E_CK" in columns and "E_sp" in columns:
        flags["E_CK_below_E_sp"] = bool(np.all(columns["E_CK"] <= columns["E_sp"] + 1e-3))
    if "E_LB" in columns:
        uppers = [columns[n] for n in ("E_sp", "E_sl_sp", "E_bar_sym") if n in columns]
        if uppers:
            flags["E_LB_below_uppers"] = bool(
                all(np.all(columns["E_LB"] <= u + 1e-3) for u in uppers))

    conv = 1.0 if spec.rate_unit == "nats" else LOG2
    table = CurveTable(
        unit=spec.rate_unit,
        rates=rates / conv,
        columns={k: v / conv for k, v in columns.items()},
        provenance={
            "schema": 1,
            "unit": spec.rate_unit,
            "config_hash": _config_hash(spec, which),
            "seed": spec.seed,
            "package_version": __version__,
        },
        warnings_seen=caught,
        flags=flags,
    )
    return table


def figure_bsc(p: float, out_dir: str, cfg: OptimizerConfig | None = None,
               n_rates: int = 20) -> CurveTable:
    """Reproduce the BSC figure data: E_LB, E_bar_sym, E_sp, E_sl_sp, E_B."""
    if not 0.0 < p < 0.5:
        raise ValidationError("figure_bsc: need 0 < p < 1/2")
    cfg = cfg or OptimizerConfig()
    w = ChannelKernel.bsc(p)
    uni = ProbVec.uniform(2)
    cap_bits = (LOG2 - (-p * math.log(p) - (1 - p) * math.log(1 - p))) / LOG2
    rates_bits = np.linspace(0.05, 0.95, n_rates) * cap_bits
    spec = ChannelSpec(w=w, metric=ml_metric(w), p=uni,
                       rates_nats=rates_bits * LOG2, rate_unit="bits",
                       seed=cfg.rng_seed, restarts=cfg.restarts)
    table = run_suite(spec, which=("E_LB", "E_bar_sym", "E_sp", "E_sl_sp", "E_B"))
    os.makedirs(out_dir, exist_ok=True)
    table.write_csv(os.path.join(out_dir, f"bsc_p{p:g}_bounds.csv"))
    dat_path = os.path.join(out_dir, f"bsc_p{p:g}_bounds.dat")
    names = list(table.columns)
    with open(dat_path, "w", encoding="utf-8") as fh:
        fh.write("# gnuplot data: R " + " ".join(names) + "\n")
        for i, r in enumerate(table.rates):
            fh.write(" ".join([repr(float(r))] +
                              [repr(float(table.columns[n][i])) for n in names]) + "\n")
    return table


def oracle_report(spec: ChannelSpec, n: int, M: int, seeds,
                  trials: int | None = None) -> dict:
    """Finite-blocklength anchors against the sphere-packing curve."""
    cfg = spec.optimizer_config()
    rows = []
    ok = True
    if seeds:
        rate = math.log(M) / n
        sp = e_sp(rate, spec.p, spec.w, cfg)
        slack = spec.w.nx * spec.w.ny * math.log(n + 1.0) / n
        for seed in seeds:
            cb = random_cc_code(spec.p, n, M, seed)
            if trials:
                res = monte_carlo_pe(cb, spec.w, spec.metric, trials, seed)
            else:
                res = exact_pe(cb, spec.w, spec.metric)
            anchor = res.exponent
            within = (not math.isfinite(anchor)) or anchor <= sp + slack
            ok = ok and within
            rows.append({"seed": seed, "pe": res.pe, "anchor": anchor,
                         "e_sp": sp, "slack": slack, "within": within})
    return {"n": n, "M": M, "rows": rows, "all_within": ok}


def _build_cli() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relbounds",
                                 description="Reliability-function bounds for DMCs")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="validate a channel spec file")
    v.add_argument("spec")

    b = sub.add_parser("bounds", help="compute bound curves for a spec")
    b.add_argument("spec")
    b.add_argument("--which", nargs="+", default=None, metavar="BOUND",
                   help=f"subset of {', '.join(ALL_BOUNDS)}")
    b.add_argument("--out", required=True)
    unit = b.add_mutually_exclusive_group()
    unit.add_argument("--bits", action="store_true")
    unit.add_argument("--nats", action="store_true")

    f = sub.add_parser("figure-bsc", help="reproduce the BSC bound figure data")
    f.add_argument("--p", type=float, required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--rates", type=int, default=20)
    f.add_argument("--restarts", type=int, default=16)
    f.add_argument("--seed", type=int, default=101)

    o = sub.add_parser("oracle", help="finite-blocklength codebook anchors")
    o.add_argument("spec")
    o.add_argument("--n", type=int, required=True)
    o.add_argument("--M", type=int, required=True)
    o.add_argument("--seeds", type=int, nargs="*", default=[])
    o.add_argument("--trials", type=int, default=None,
                   help="Monte Carlo trials (default: exact enumeration)")
    return ap


def main(argv=None) -> int:
    args = _build_cli().parse_args(argv)
    try:
        if args.command == "validate":
            with open(args.spec, encoding="utf-8") as fh:
                parse_spec(fh.read())
            print("spec is valid")
            return 0
        if args.command == "bounds":
            with open(args.spec, encoding="utf-8") as fh:
                spec = parse_spec(fh.read())
            if args.bits or args.nats:
                unit = "bits" if args.bits else "nats"
                spec = ChannelSpec(w=spec.w, metric=spec.metric, p=spec.p,
                                   rates_nats=spec.rates_nats, rate_unit=unit,
                                   nz=spec.nz, alpha_grid=spec.alpha_grid,
                                   wz_grid=spec.wz_grid, seed=spec.seed,
                                   restarts=spec.restarts, raw=spec.raw)
            table = run_suite(spec, which=args.which)
            table.write_csv(args.out)
            print(f"wrote {args.out}")
            return 3 if table.warnings_seen else 0
        if args.command == "figure-bsc":
            cfg = OptimizerConfig(restarts=args.restarts, rng_seed=args.seed)
            table = figure_bsc(args.p, args.out, cfg, n_rates=args.rates)
            print(f"wrote figure data for p={args.p:g} to {args.out}")
            return 3 if table.warnings_seen else 0
        if args.command == "oracle":
            with open(args.spec, encoding="utf-8") as fh:
                spec = parse_spec(fh.read())
            report = oracle_report(spec, args.n, args.M, args.seeds, args.trials)
            for row in report["rows"]:
                print(f"seed={row['seed']:>6d}  pe={row['pe']:.6e}  "
                      f"anchor={row['anchor']:.6f}  e_sp+slack={row['e_sp'] + row['slack']:.6f}  "
                      f"within={row['within']}")
            if not report["rows"]:
                print("no seeds given; nothing to do")
            return 0 if report["all_within"] else 3
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
