"""Command-line interface: ``sweep``, ``point``, ``wigner`` and ``selftest``.

Settings resolve as defaults < config file (``key = value`` lines) < ``QPSK_KGR_*``
environment variables < command-line flags.  Exit codes: 0 success, 1 configuration
error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import __version__
from .constellation import make_constellation, gram_matrix, transmissivity
from .heterodyne import GridInadequateError
from .infotheory import KgrPoint
from .optimizer import BUDGETS, get_budget, optimize_receiver, parse_receiver, sweep
from .phase_space import WignerTruncationError, default_axis, symmetry_report, wigner_map
from .receivers import FockVector, ReceiverSpec, SingularGramError, reference_vector_fock

log = logging.getLogger("qpsk_kgr")

ENV_PREFIX = "QPSK_KGR_"
SIG_DIGITS = 12
PLATEAU_PHASES = (0.0, math.pi / 2, math.pi, math.pi / 2)
ROW_FIELDS = ("d", "T", "receiver", "K", "I_AB", "chi_BE", "alpha2_opt", "phases_opt", "ratio_vs_het")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class ConfigError(ValueError):
    pass


def _split(value) -> tuple:
    if isinstance(value, (list, tuple)):
        items = value
    else:
        items = str(value).replace(";", ",").split(",")
    return tuple(str(s).strip() for s in items if str(s).strip())


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    s = str(value).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {value!r}")


@dataclass(frozen=True)
class RunConfig:
    beta: float = 0.95
    kappa: float = 0.2
    d_min: float = 0.0
    d_max: float = 150.0
    d_step: float = 2.0
    receivers: tuple = ("pgm", "kor")
    copies: tuple = ()
    seed: int = 0
    budget: str = "default"
    out: str = ""
    format: str = "csv"
    distance: float = 30.0
    alpha2: float = 1.0
    phases: tuple = ()
    extent: float = 6.0
    nodes: int = 241
    normalize: bool = False
    vacuum: bool = False
    compare: str = ""
    closeness: float = 0.05

    def validate(self) -> RunConfig:
        if not 0 < self.beta <= 1:
            raise ConfigError(f"beta must lie in (0, 1], got {self.beta}")
        if self.kappa <= 0:
            raise ConfigError("kappa must be positive")
        if self.d_min < 0 or self.d_max < self.d_min or self.d_step <= 0:
            raise ConfigError("need 0 <= d_min <= d_max and d_step > 0")
        if self.distance < 0:
            raise ConfigError("distance must be nonnegative")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.budget not in BUDGETS:
            raise ConfigError(f"unknown budget {self.budget!r}; choose from {sorted(BUDGETS)}")
        try:
            for tag in self.receiver_tags:
                parse_receiver(tag)
        except ValueError as err:
            raise ConfigError(str(err)) from None
        if self.phases and len(self.phases) != 4:
            raise ConfigError("phases needs four values")
        if self.alpha2 <= 0 or self.extent <= 0 or self.closeness <= 0:
            raise ConfigError("alpha2, extent and closeness must be positive")
        if self.nodes < 41 or self.nodes % 2 == 0:
            raise ConfigError("nodes must be odd and at least 41")
        if self.compare and self.compare not in ("pgm", "kor"):
            raise ConfigError("compare must name pgm or kor")
        return self

    @property
    def receiver_tags(self) -> tuple:
        tags = [r.lower() for r in self.receivers] + [f"ff:{int(n)}" for n in self.copies]
        return tuple(dict.fromkeys(tags))

    @property
    def distances(self) -> np.ndarray:
        n = int(math.floor((self.d_max - self.d_min) / self.d_step + 1e-9)) + 1
        return np.round(self.d_min + self.d_step * np.arange(n), 9)

    def metadata(self) -> dict:
        # the output path is left out so identical runs give identical files anywhere
        d = dataclasses.asdict(self)
        d.pop("out")
        return d


_CONVERTERS = {float: float, int: int, bool: _bool, tuple: _split, str: str}
_FIELD_TYPES = {f.name: type(f.default) for f in fields(RunConfig)}


def _coerce(key: str, value):
    key = key.strip().lower().replace("-", "_")
    if key == "receiver":
        key = "receivers"
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown setting {key!r}")
    try:
        v = _CONVERTERS[_FIELD_TYPES[key]](value)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad value for {key}: {err}") from None
    if key == "phases":
        try:
            v = tuple(float(s) for s in v)
        except ValueError:
            raise ConfigError("phases must be numbers") from None
    if key == "copies":
        try:
            v = tuple(int(s) for s in v)
        except ValueError:
            raise ConfigError("copies must be integers") from None
    return key, v


def read_config_file(path: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_string("[run]\n" + fh.read())
    except (OSError, configparser.Error) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    return dict(_coerce(k, v) for k, v in parser["run"].items())


def read_env(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for key, value in environ.items():
        if key.startswith(ENV_PREFIX) and key != ENV_PREFIX + "CONFIG":
            k, v = _coerce(key[len(ENV_PREFIX):], value)
            out[k] = v
    return out


def resolve_config(args: argparse.Namespace, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    settings = {}
    path = args.config or environ.get(ENV_PREFIX + "CONFIG")
    if path:
        settings.update(read_config_file(path))
    settings.update(read_env(environ))
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None and value != []:
            settings.update([_coerce(f.name, value)])
    return RunConfig(**settings).validate()


# --- formatting ---------------------------------------------------------------------


def _num(v) -> str:
    v = float(v)
    return "nan" if math.isnan(v) else format(v, f".{SIG_DIGITS}g")


def _json_num(v):
    v = float(v)
    return None if not math.isfinite(v) else float(format(v, f".{SIG_DIGITS}g"))


def point_row(pt: KgrPoint, het_K: float) -> dict:
    ratio = pt.K / het_K if het_K > 0 and math.isfinite(pt.K) else float("nan")
    return {
        "d": pt.distance_km, "T": pt.T, "receiver": pt.receiver, "K": pt.K, "I_AB": pt.I_AB,
        "chi_BE": pt.chi_BE, "alpha2_opt": pt.alpha2, "phases_opt": tuple(pt.phases), "ratio_vs_het": ratio,
    }


def _csv_cell(v):
    if isinstance(v, str):
        return v
    if isinstance(v, tuple):
        return " ".join(_num(x) for x in v)
    return _num(v)


def _json_cell(v):
    if isinstance(v, str):
        return v
    if isinstance(v, tuple):
        return [_json_num(x) for x in v]
    return _json_num(v)


def render(rows: list, columns, metadata: dict, fmt: str) -> str:
    if fmt == "json":
        doc = {"metadata": metadata, "rows": [{c: _json_cell(r[c]) for c in columns} for r in rows]}
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_csv_cell(r[c]) for c in columns])
    return buf.getvalue()


def emit(text: str, metadata: dict, cfg: RunConfig):
    if not cfg.out:
        sys.stdout.write(text)
        return
    with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    if cfg.format == "csv":
        with open(cfg.out + ".meta.json", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(metadata, indent=1) + "\n")
    log.info("wrote %s", cfg.out)


def _metadata(command: str, cfg: RunConfig, **extra) -> dict:
    return {"command": command, "version": __version__, "seed": cfg.seed, "config": cfg.metadata(), **extra}


# --- commands -----------------------------------------------------------------------


def cmd_sweep(cfg: RunConfig) -> int:
    budget = get_budget(cfg.budget, cfg.seed)
    res = sweep(cfg.distances, list(cfg.receiver_tags), cfg.beta, budget, cfg.kappa)
    het = res.K("het")
    rows = []
    for i in range(len(res.distances)):
        for tag, pts in res.points.items():
            rows.append(point_row(pts[i], het[i]))
    failures = [{"receiver": r, "d": d, "error": e} for r, d, e in res.failures]
    meta = _metadata("sweep", cfg, failures=failures)
    emit(render(rows, ROW_FIELDS, meta, cfg.format), meta, cfg)
    for f in failures:
        print(f"error: {f['receiver']} failed at d={f['d']:g} km: {f['error']}", file=sys.stderr)
    return EXIT_NUMERIC if failures else EXIT_OK


def cmd_point(cfg: RunConfig, receiver: str) -> int:
    try:
        parse_receiver(receiver)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    budget = get_budget(cfg.budget, cfg.seed)
    T = transmissivity(cfg.distance, cfg.kappa)
    pt = optimize_receiver(receiver, T, cfg.beta, budget, cfg.distance)
    het = pt if receiver == "het" else optimize_receiver("het", T, cfg.beta, budget, cfg.distance)
    row = {k: _json_cell(v) for k, v in point_row(pt, het.K).items()}
    row["evaluations"] = pt.evaluations
    sys.stdout.write(json.dumps(row) + "\n")
    if cfg.out:
        meta = _metadata("point", cfg)
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"metadata": meta, "rows": [row]}, indent=1) + "\n")
    return EXIT_OK if math.isfinite(pt.K) else EXIT_NUMERIC


def measurement_vector(receiver: str, cfg: RunConfig) -> FockVector:
    if receiver == "pgm":
        spec = ReceiverSpec.pgm(4)
    elif receiver == "kor":
        spec = ReceiverSpec(cfg.phases or PLATEAU_PHASES)
    else:
        raise ConfigError(f"wigner maps are available for pgm and kor, not {receiver!r}")
    T = transmissivity(cfg.distance, cfg.kappa)
    c = make_constellation(4, cfg.alpha2)
    return reference_vector_fock(spec, gram_matrix(c, T), math.sqrt(T) * c.amplitudes[0])


def cmd_wigner(cfg: RunConfig, receiver: str | None) -> int:
    axis = default_axis(cfg.extent, cfg.nodes)
    if cfg.vacuum:
        state, label = FockVector(np.array([1.0 + 0j])), "vacuum"
    else:
        if not receiver:
            raise ConfigError("wigner needs a receiver (pgm or kor) or --vacuum")
        state, label = measurement_vector(receiver, cfg), receiver
    wmap = wigner_map(state, axis, normalize=cfg.normalize)
    report = symmetry_report(wmap)
    diag = {
        "state": label,
        "min_value": _json_num(wmap.min_value),
        "max_value": _json_num(wmap.max_value),
        "normalization_integral": _json_num(wmap.normalization_integral),
        "imag_residue": float(format(wmap.imag_residue, ".3g")),
        "boundary_max": float(format(wmap.boundary_max, ".3g")),
        "peaks": [[_json_num(v) for v in p] for p in report["peaks"]],
    }
    if cfg.compare:
        other = wigner_map(measurement_vector(cfg.compare, cfg), axis, normalize=cfg.normalize)
        diff = float(np.abs(other.values - wmap.values).max())
        diag["compare"] = {"state": cfg.compare, "max_abs_difference": _json_num(diff),
                           "closeness": cfg.closeness, "close": diff < cfg.closeness}
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    rows = [{"x": x, "y": y, "W": w} for x, y, w in zip(X.ravel(), Y.ravel(), wmap.values.ravel())]
    meta = _metadata("wigner", cfg, diagnostics=diag)
    emit(render(rows, ("x", "y", "W"), meta, cfg.format), meta, cfg)
    print(f"min W = {wmap.min_value:.6g}, integral = {wmap.normalization_integral:.8g}", file=sys.stderr)
    return EXIT_OK


def cmd_selftest(cfg: RunConfig) -> int:
    from .selftest import run_all

    results = run_all()
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


# --- argument parsing ---------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("run settings")
    g.add_argument("--config", help="key = value settings file")
    g.add_argument("--beta", type=float, help="reconciliation efficiency (0.95)")
    g.add_argument("--kappa", type=float, help="fibre loss in dB/km (0.2)")
    g.add_argument("--d-min", dest="d_min", type=float)
    g.add_argument("--d-max", dest="d_max", type=float)
    g.add_argument("--d-step", dest="d_step", type=float)
    g.add_argument("--receiver", dest="receivers", action="append", default=[],
                   help="pgm, kor, het or ff:N; repeatable")
    g.add_argument("--copies", action="append", type=int, default=[], help="add ff:N; repeatable")
    g.add_argument("--seed", type=int)
    g.add_argument("--budget", choices=sorted(BUDGETS))
    g.add_argument("--out", help="output file (stdout if omitted)")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="qpsk-kgr", description="QPSK CV-QKD key rates with state-discrimination receivers")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("sweep", parents=[common], help="optimized rates over a distance range")
    pt = sub.add_parser("point", parents=[common], help="one optimized operating point as JSON")
    pt.add_argument("receiver")
    pt.add_argument("--distance", type=float)
    w = sub.add_parser("wigner", parents=[common], help="Wigner map of a reference measurement vector")
    w.add_argument("receiver", nargs="?")
    w.add_argument("--distance", type=float)
    w.add_argument("--alpha2", type=float)
    w.add_argument("--phases", help="four comma-separated phases (kor)")
    w.add_argument("--extent", type=float)
    w.add_argument("--nodes", type=int)
    w.add_argument("--normalize", action="store_const", const=True)
    w.add_argument("--vacuum", action="store_const", const=True, help="analytic vacuum map, for debugging")
    w.add_argument("--compare", help="also map this receiver and report the largest difference")
    w.add_argument("--closeness", type=float)
    sub.add_parser("selftest", parents=[common], help="run the fast invariant checks")
    return p


def main(argv=None, environ=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        cfg = resolve_config(args, environ)
        receiver = getattr(args, "receiver", None)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "point":
            return cmd_point(cfg, receiver.lower())
        if args.command == "wigner":
            return cmd_wigner(cfg, receiver.lower() if receiver else None)
        return cmd_selftest(cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularGramError, GridInadequateError, WignerTruncationError, ArithmeticError,
            np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
