"""Command-line surface for enumeration, masses, identity reports,
determinant routes, Monte Carlo runs, and the acceptance selftest.

Every subcommand takes one TOML config file as its positional argument.
Configs are schema validated up front: unknown keys are rejected by
name, required keys are reported when missing, and all randomness flows
from an explicit seed field (never the clock).  Outputs are CSV and
JSON-lines with 17 significant digits, and identical config plus seed
reproduces identical files byte for byte.

Exit codes: 0 success, 2 config or domain error, 3 numeric error,
4 horizon error, 5 acceptance failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type, Union

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # type: ignore[no-redef]

from . import __version__
from .acceptance import ALL_CHECKS, run_all
from .detlap import DetInputs, export_record, logdet_via_blm, \
    logdet_via_time_integrals, make_synthetic_table
from .errors import AcceptanceFailure, ConfigError, HorizonError, \
    LoopMeasureError, NumericError
from .hypgeom import MoebiusMatrix
from .identity import export_report, flat_puncture_report
from .loopmass import FORMULA_DESCRIPTIONS, AnnulusRoute, FormulaId, \
    MassResult, electrical_thickness, essential_total_mass, \
    mass_annulus_total, mass_annulus_winding, mass_disc_winding_intersecting_K, \
    mass_flat_class, mass_hyperbolic_class, mass_sphere_winding_intersecting_K, \
    mass_torus_hit
from .mcloop import LoopSampleSpec, batch_estimates, estimate_hit_mass, \
    export_batches
from .spectrum import GroupPresentation, enumerate_spectrum, export_csv, \
    load_spectrum, save_spectrum

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_HORIZON = 4
EXIT_ACCEPTANCE = 5

_REQUIRED = object()


class _Schema:
    """Typed key extraction with unknown-key rejection by name."""

    def __init__(self, command: str, raw: Dict[str, Any]):
        if not isinstance(raw, dict):
            raise ConfigError(f"{command}: config must be a table")
        self.command = command
        self.raw = dict(raw)

    def take(self, key: str, types: Union[Type, Tuple[Type, ...]],
             default: Any = _REQUIRED) -> Any:
        if key not in self.raw:
            if default is _REQUIRED:
                raise ConfigError(
                    f"{self.command}: missing required config key {key!r}")
            return default
        value = self.raw.pop(key)
        if isinstance(value, bool) and bool not in (
                types if isinstance(types, tuple) else (types,)):
            raise ConfigError(
                f"{self.command}: config key {key!r} has wrong type bool")
        if not isinstance(value, types):
            raise ConfigError(
                f"{self.command}: config key {key!r} has wrong type "
                f"{type(value).__name__}")
        return value

    def take_number(self, key: str, default: Any = _REQUIRED) -> float:
        value = self.take(key, (int, float), default)
        return value if value is default else float(value)

    def subtable(self, key: str) -> "_Schema":
        value = self.take(key, dict, default={})
        return _Schema(f"{self.command}.{key}", value)

    def finish(self) -> None:
        if self.raw:
            key = sorted(self.raw)[0]
            raise ConfigError(
                f"{self.command}: unknown config key {key!r}")


def _load_config(path: str, command: str) -> _Schema:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid TOML: {exc}") from exc
    return _Schema(command, raw)


def _common_out_dir(schema: _Schema, override: Optional[str]) -> str:
    out_dir = schema.take("out_dir", str, default=".")
    threads = schema.take("threads", int, default=1)
    if threads < 1:
        raise ConfigError(f"{schema.command}: threads must be at least 1")
    # All current code paths run sequentially; chunked counter-based RNG
    # makes results independent of the thread count anyway.
    if override is not None:
        out_dir = override
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def _group_from(schema: _Schema) -> GroupPresentation:
    preset = schema.take("group", str, default=None)
    matrices = schema.take("generators", list, default=None)
    if (preset is None) == (matrices is None):
        raise ConfigError(
            f"{schema.command}: give exactly one of 'group' or 'generators'")
    if preset is not None:
        if preset != "modular-torus":
            raise ConfigError(
                f"{schema.command}: unknown group preset {preset!r};"
                " available: modular-torus")
        return GroupPresentation.modular_torus()
    name = schema.take("group_name", str, default="custom")
    gens: List[MoebiusMatrix] = []
    for i, rows in enumerate(matrices):
        ok = (isinstance(rows, list) and len(rows) == 2
              and all(isinstance(r, list) and len(r) == 2
                      and all(isinstance(x, (int, float)) for x in r)
                      for r in rows))
        if not ok:
            raise ConfigError(
                f"{schema.command}: generators[{i}] must be a 2x2 number matrix")
        gens.append(MoebiusMatrix(float(rows[0][0]), float(rows[0][1]),
                                  float(rows[1][0]), float(rows[1][1])))
    return GroupPresentation(name=name, generators=tuple(gens))


def _homology_pair(schema: _Schema, key: str,
                   default: Any = None) -> Optional[Tuple[int, int]]:
    value = schema.take(key, list, default=default)
    if value is None:
        return None
    if len(value) != 2 or not all(
            isinstance(x, int) and not isinstance(x, bool) for x in value):
        raise ConfigError(
            f"{schema.command}: {key} must be a pair of integers")
    return (value[0], value[1])


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _json_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _fmt(v)
    if isinstance(v, int):
        return str(v)
    return json.dumps(v)


def cmd_spectrum(schema: _Schema, out_dir: str) -> int:
    group = _group_from(schema)
    max_wl = schema.take("max_word_length", int)
    hom = _homology_pair(schema, "homology_filter")
    basename = schema.take("output_basename", str, default="spectrum")
    schema.finish()
    table = enumerate_spectrum(group, max_wl, homology_filter=hom)
    cache = os.path.join(out_dir, basename + ".gspc")
    csv = os.path.join(out_dir, basename + ".csv")
    save_spectrum(table, cache)
    export_csv(table, csv)
    print(f"spectrum: {table.n_records} records ({table.n_primitive} primitive)"
          f" to word length {max_wl},"
          f" reliable horizon {_fmt(table.reliable_horizon)}")
    print(f"wrote {cache} and {csv}")
    return EXIT_OK


def _mass_from_config(schema: _Schema) -> Tuple[FormulaId, MassResult]:
    fname = schema.take("formula", str)
    try:
        fid = FormulaId[fname]
    except KeyError:
        known = ", ".join(f.name for f in FormulaId)
        raise ConfigError(
            f"{schema.command}: unknown formula {fname!r}; available: {known}"
        ) from None
    p = schema.subtable("params")
    if fid is FormulaId.HYP_CLASS:
        length = p.take_number("length")
        iteration = p.take("iteration", int, default=1)
        p.finish()
        return fid, mass_hyperbolic_class(length, iteration)
    if fid is FormulaId.FLAT_CLASS:
        area = p.take_number("area")
        norm = p.take_number("norm")
        p.finish()
        return fid, mass_flat_class(area, norm)
    if fid is FormulaId.ANNULUS_WINDING:
        r = p.take_number("r")
        m = p.take("m", int)
        p.finish()
        return fid, mass_annulus_winding(r, m)
    if fid in (FormulaId.ANNULUS_TOTAL_SERIES, FormulaId.ANNULUS_TOTAL_INTEGRAL):
        r = p.take_number("r")
        p.finish()
        route = (AnnulusRoute.SERIES if fid is FormulaId.ANNULUS_TOTAL_SERIES
                 else AnnulusRoute.INTEGRAL)
        return fid, mass_annulus_total(r, route)
    if fid is FormulaId.TORUS_HIT:
        area = p.take_number("area")
        length = p.take_number("length")
        m = p.take("m", int)
        p.finish()
        return fid, mass_torus_hit(area, length, m)
    if fid is FormulaId.DISC_WINDING_K:
        log_psi = p.take_number("log_psi_prime")
        m = p.take("m", int)
        p.finish()
        return fid, mass_disc_winding_intersecting_K(log_psi, m)
    if fid is FormulaId.ELECTRIC_THICKNESS_WINDING:
        m = p.take("m", int)
        theta = p.take_number("theta", default=None)
        if theta is None:
            log_f = p.take_number("log_f_prime")
            log_h = p.take_number("log_h_prime")
            theta = electrical_thickness(log_f, log_h)
        p.finish()
        return fid, mass_sphere_winding_intersecting_K(theta, m)
    assert fid is FormulaId.ESSENTIAL_TOTAL
    path = p.take("spectrum_path", str)
    tail = p.take_number("tail_exponent")
    p.finish()
    return fid, essential_total_mass(load_spectrum(path), tail)


def cmd_mass(schema: _Schema, out_dir: str) -> int:
    basename = schema.take("output_basename", str, default="mass")
    fid, result = _mass_from_config(schema)
    schema.finish()
    inputs = ", ".join(
        f'"{k}": {_json_value(v)}' for k, v in sorted(result.inputs.items()))
    record = (f'{{"formula": "{fid.name}", "inputs": {{{inputs}}},'
              f' "value": {_fmt(result.value)},'
              f' "error_bound": {_fmt(result.error_bound)}}}\n')
    path = os.path.join(out_dir, basename + ".json")
    with open(path, "w", newline="") as fh:
        fh.write(record)
    print(f"{fid.name}: value={_fmt(result.value)} "
          f"error_bound={_fmt(result.error_bound)}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_identity(schema: _Schema, out_dir: str) -> int:
    group = _group_from(schema)
    max_wl = schema.take("max_word_length", int)
    hom = _homology_pair(schema, "class", default=_REQUIRED)
    area = schema.take_number("area")
    class_norm = schema.take_number("class_norm")
    allow_unverified = schema.take("allow_unverified", bool, default=False)
    basename = schema.take("output_basename", str, default="identity")
    schema.finish()
    table = enumerate_spectrum(group, max_wl, homology_filter=hom)
    report = flat_puncture_report(area, class_norm, table,
                                  allow_unverified=allow_unverified)
    path = os.path.join(out_dir, basename + ".csv")
    export_report(report, path)
    print(f"identity: lhs={_fmt(report.lhs)} n_terms={report.n_terms}"
          f" extrapolated={_fmt(report.extrapolated_limit)}"
          f" relative_gap={_fmt(report.relative_gap)}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_detlap(schema: _Schema, out_dir: str) -> int:
    synthetic = schema.take("synthetic", str, default=None)
    spectrum_path = schema.take("spectrum_path", str, default=None)
    has_group = "group" in schema.raw or "generators" in schema.raw
    sources = sum(x is not None for x in (synthetic, spectrum_path)) + has_group
    if sources != 1:
        raise ConfigError(
            f"{schema.command}: give exactly one table source:"
            " 'synthetic', 'spectrum_path', or 'group'/'generators'")
    if synthetic is not None:
        table = make_synthetic_table(synthetic)
    elif spectrum_path is not None:
        table = load_spectrum(spectrum_path)
    else:
        group = _group_from(schema)
        max_wl = schema.take("max_word_length", int)
        table = enumerate_spectrum(group, max_wl)
    area = schema.take_number("area")
    horizon = schema.take_number("horizon", default=None)
    basename = schema.take("output_basename", str, default="detlap")
    schema.finish()
    inputs = DetInputs(area=area, table=table,
                       horizon=table.reliable_horizon if horizon is None
                       else horizon)
    value_blm, budget_blm = logdet_via_blm(inputs)
    value_time, budget_time = logdet_via_time_integrals(inputs)
    path = os.path.join(out_dir, basename + ".txt")
    with open(path, "w", newline="") as fh:
        fh.write(export_record("blm", value_blm, budget_blm,
                               inputs.tail_model) + "\n")
        fh.write(export_record("time-integral", value_time, budget_time,
                               inputs.tail_model) + "\n")
        fh.write(f"route_difference={_fmt(abs(value_blm - value_time))}"
                 f" combined_budget="
                 f"{_fmt(budget_blm.total + budget_time.total)}\n")
    print(f"detlap: blm={_fmt(value_blm)} time-integral={_fmt(value_time)}"
          f" |diff|={_fmt(abs(value_blm - value_time))}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_mc(schema: _Schema, out_dir: str) -> int:
    def pair(key: str) -> complex:
        v = schema.take(key, list)
        if len(v) != 2 or not all(isinstance(x, (int, float))
                                  and not isinstance(x, bool) for x in v):
            raise ConfigError(
                f"{schema.command}: {key} must be [re, im] numbers")
        return complex(float(v[0]), float(v[1]))

    omega1 = pair("omega1")
    omega2 = pair("omega2")
    p = schema.take("p", int)
    q = schema.take("q", int)
    m = schema.take("m", int)
    n_steps = schema.take("n_steps", int)
    n_samples = schema.take("n_samples", int)
    seed = schema.take("seed", int)
    n_batches = schema.take("n_batches", int, default=10)
    basename = schema.take("output_basename", str, default="mc")
    schema.finish()
    spec = LoopSampleSpec(omega1=omega1, omega2=omega2, p=p, q=q, m=m,
                          n_steps=n_steps, n_samples=n_samples, seed=seed)
    batches = batch_estimates(spec, n_batches)
    combined = estimate_hit_mass(spec)
    g = math.gcd(abs(p), abs(q))
    reference = mass_torus_hit(spec.area, abs(spec.lam) / g, m * g).value
    path = os.path.join(out_dir, basename + ".csv")
    with open(path, "w", newline="") as fh:
        export_batches(fh, batches, combined, reference)
    z = ((combined.mean - reference) / combined.stderr
         if combined.stderr > 0 else 0.0)
    print(f"mc: estimate={_fmt(combined.mean)} stderr={_fmt(combined.stderr)}"
          f" closed_form={_fmt(reference)} z={z:+.2f} n={combined.n}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_selftest(schema: _Schema, out_dir: str) -> int:
    names = schema.take("checks", list, default=None)
    basename = schema.take("output_basename", str, default="selftest")
    schema.finish()
    if names is not None:
        bad = [n for n in names if n not in ALL_CHECKS]
        if bad:
            raise ConfigError(
                f"{schema.command}: unknown check name {bad[0]!r}; available: "
                + ", ".join(ALL_CHECKS))
    results = run_all(names)
    path = os.path.join(out_dir, basename + ".txt")
    # detail strings are deterministic; elapsed goes to stdout only so the
    # output file is bit identical across runs
    with open(path, "w", newline="") as fh:
        for r in results:
            fh.write(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}\n")
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} "
              f"({r.elapsed:.2f}s): {r.detail}")
    print(f"wrote {path}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise AcceptanceFailure(
            f"{len(failed)} of {len(results)} checks failed: "
            + ", ".join(failed))
    return EXIT_OK


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "mass": cmd_mass,
    "identity": cmd_identity,
    "detlap": cmd_detlap,
    "mc": cmd_mc,
    "selftest": cmd_selftest,
}

_COMMAND_HELP = {
    "spectrum": "enumerate a length spectrum; writes a .gspc cache and CSV",
    "mass": "evaluate one closed-form mass by formula id; writes JSON",
    "identity": "partial sums and extrapolation of the puncture identity",
    "detlap": "determinant of the Laplacian by both routes, with budgets",
    "mc": "Monte Carlo hit-mass estimate against the closed form",
    "selftest": "run the acceptance checks; exit 5 on any failure",
}


def _build_parser() -> argparse.ArgumentParser:
    formulas = "\n".join(
        f"  {fid.name:26s} {FORMULA_DESCRIPTIONS[fid]}" for fid in FormulaId)
    parser = argparse.ArgumentParser(
        prog="loopmeasure",
        description="Brownian loop-measure masses, length spectra, and"
                    " determinant-of-Laplacian cross-checks.",
        epilog="mass formula ids:\n" + formulas
               + "\n\nexit codes: 0 ok, 2 config error, 3 numeric error,"
                 " 4 horizon error, 5 acceptance failure",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        sp = sub.add_parser(name, help=_COMMAND_HELP[name])
        sp.add_argument("config", help="TOML config file for this run")
        sp.add_argument("--out-dir", default=None,
                        help="override the config out_dir")
        sp.add_argument("--threads", type=int, default=None,
                        help="override the config thread count (default 1)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        schema = _load_config(args.config, args.command)
        if args.threads is not None:
            schema.raw["threads"] = args.threads
        out_dir = _common_out_dir(schema, args.out_dir)
        return _COMMANDS[args.command](schema, out_dir)
    except AcceptanceFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ACCEPTANCE
    except HorizonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HORIZON
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (LoopMeasureError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
