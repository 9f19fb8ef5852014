"""Command-line driver: experiments over model × N grids with CSV artifacts.

Every diagnostic is a subcommand; data outputs are byte-deterministic for a
fixed configuration (17-significant-digit decimals, fixed column order, LF
line endings, no timestamps inside data files — run metadata goes to a
``.meta.json`` sidecar).  Parallel and serial runs produce identical bytes:
work is partitioned across particle counts and merged in sorted order
regardless of completion order.

Configuration precedence: command-line flags > config file (plain-text
``key = value`` lines) > the ``LEVY_KAC_THREADS`` environment variable >
built-in defaults.

Exit status: 0 on success, 2 on a precondition failure (bad flags, unknown
model, invalid configuration, unwritable output directory), 3 on a
numeric-certification failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .clt_engine import clt_sup_error, highfreq_gap, omega
from .densities import estimate_tail_law, make_model, moments
from .errors import (
    InputValidationError,
    InvalidStableParameterError,
    LevyKacError,
    UnknownModelError,
)
from .kac_sphere import (
    chaos_report,
    cross_entropy_per_particle,
    marginal_k,
    relative_entropy,
    sphere_law,
)
from .stable import (
    SourceLaw,
    StableParams,
    exponent_from_tail,
    stable_density,
)

__all__ = ["ExperimentConfig", "main", "run"]

_GRID_POW_MIN, _GRID_POW_MAX = 9, 22
_FDA_BETAS = (1.0, 0.3, 0.1, 0.03)
_HIGHFREQ_BETAS = (0.25, 0.5, 1.0, 2.0)
_GAMMA0_WINDOW = (0.95, 1.05)
_PINSKER_SLACK = -1e-9


# ----------------------------------------------------------------------
# Configuration
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated run configuration shared by every experiment subcommand."""

    model: str
    n_values: tuple[int, ...] = ()
    grid_pow: int = 11
    tau: float = 0.1
    out_dir: Path = Path(".")
    threads: int = 1
    force_cutoff: bool = False

    def __post_init__(self) -> None:
        counts = tuple(int(v) for v in self.n_values)
        if any(v < 1 for v in counts):
            raise InputValidationError(
                f"particle counts must be positive, got {counts}"
            )
        if any(a > b for a, b in zip(counts, counts[1:])):
            raise InputValidationError(
                f"n values must be sorted ascending, got {counts}"
            )
        object.__setattr__(self, "n_values", counts)
        if not _GRID_POW_MIN <= int(self.grid_pow) <= _GRID_POW_MAX:
            raise InputValidationError(
                f"grid_pow must lie in [{_GRID_POW_MIN}, {_GRID_POW_MAX}], "
                f"got {self.grid_pow}"
            )
        object.__setattr__(self, "grid_pow", int(self.grid_pow))
        if not self.tau > 0.0:
            raise InputValidationError(f"tau must be positive, got {self.tau}")
        if int(self.threads) < 1:
            raise InputValidationError(
                f"threads must be at least 1, got {self.threads}"
            )
        object.__setattr__(self, "threads", int(self.threads))
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        object.__setattr__(self, "force_cutoff", bool(self.force_cutoff))


# ----------------------------------------------------------------------
# Deterministic serialization
# ----------------------------------------------------------------------


def _fmt(cell) -> str:
    if isinstance(cell, (bool, np.bool_)):
        return "true" if cell else "false"
    if isinstance(cell, (int, np.integer)):
        return str(int(cell))
    if isinstance(cell, (float, np.floating)):
        return "%.17g" % float(cell)
    return str(cell)


def _csv_text(header: tuple[str, ...], rows: list[tuple]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    return "\n".join(lines) + "\n"


def _emit(
    cfg: ExperimentConfig,
    name: str,
    header: tuple[str, ...],
    rows: list[tuple],
    subcommand: str,
) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / f"{name}.csv"
    path.write_text(_csv_text(header, rows), encoding="ascii", newline="")
    _write_sidecar(path, subcommand, cfg)
    print(f"wrote {path}")
    return path


def _write_sidecar(csv_path: Path, subcommand: str, cfg: ExperimentConfig) -> None:
    meta = {
        "subcommand": subcommand,
        "model": cfg.model,
        "n_values": list(cfg.n_values),
        "grid_pow": cfg.grid_pow,
        "tau": cfg.tau,
        "threads": cfg.threads,
        "force_cutoff": cfg.force_cutoff,
        "package_version": __version__,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    sidecar = csv_path.with_suffix(".meta.json")
    sidecar.write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="ascii"
    )


def _parallel_rows(fn, items, threads: int) -> list:
    """Map ``fn`` over ``items``, merging results in input (sorted) order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ----------------------------------------------------------------------
# Shared pieces
# ----------------------------------------------------------------------


def _require_counts(cfg: ExperimentConfig, subcommand: str) -> None:
    if not cfg.n_values:
        raise InputValidationError(
            f"{subcommand} requires a non-empty --n list of particle counts"
        )


def _fitted_params(model) -> StableParams:
    """Stable parameters from the model's own fitted tail law."""
    law = estimate_tail_law(model, 1e4, 1e8)
    return exponent_from_tail(SourceLaw(law.c_s, law.alpha, law.p, law.q))


def _clt_row(model, n: int, params: StableParams, cfg: ExperimentConfig):
    rec = clt_sup_error(
        model,
        n,
        params,
        grid_pow=cfg.grid_pow,
        tau=cfg.tau,
        force_cutoff=cfg.force_cutoff,
    )
    return rec


def _chaos_row(model, n: int, cfg: ExperimentConfig) -> tuple:
    rep = chaos_report(model, n, force_cutoff=cfg.force_cutoff)
    return (
        rep.n,
        rep.l1_gap_k1,
        rep.l1_gap_k2,
        rep.entropy_per_particle,
        rep.entropy_target,
        rep.w1_first_marginal,
        rep.pinsker_margin,
    )


_CLT_HEADER = ("N", "sup_err", "gamma0_ratio", "xi_max", "beta_N", "trusted")
_CHAOS_HEADER = (
    "N",
    "l1_k1",
    "l1_k2",
    "entropy_pp",
    "entropy_target",
    "w1",
    "pinsker_margin",
)


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------


def _cmd_density_info(cfg: ExperimentConfig) -> int:
    model = make_model(cfg.model)
    summary = moments(model)
    rows = [
        ("model", model.name),
        ("mass", summary.mass),
        ("mean", summary.mean),
        ("second_moment", summary.second_moment),
        ("fourth_moment", summary.fourth_moment),
        ("energy", summary.E),
        ("mgf_strip", model.mgf_strip),
        ("tail_start", model.tail_start),
    ]
    if model.analytic_tail is not None:
        rows.append(("tail_alpha", model.analytic_tail.alpha))
        rows.append(("tail_amplitude", model.analytic_tail.D))
    _emit(cfg, "density_info", ("field", "value"), rows, "density-info")
    return 0


def _cmd_clt(cfg: ExperimentConfig) -> int:
    _require_counts(cfg, "clt")
    model = make_model(cfg.model)
    params = _fitted_params(model)
    records = _parallel_rows(
        lambda n: _clt_row(model, n, params, cfg), cfg.n_values, cfg.threads
    )
    rows = [
        (r.N, r.sup_err, r.gamma0_ratio, r.xi_max, r.beta_N, r.trusted)
        for r in records
    ]
    _emit(cfg, "clt", _CLT_HEADER, rows, "clt")
    return 0


def _cmd_marginal(cfg: ExperimentConfig) -> int:
    _require_counts(cfg, "marginal")
    model = make_model(cfg.model)

    def rows_for(n: int) -> list[tuple]:
        law = sphere_law(model, n, force_cutoff=cfg.force_cutoff)
        v_max = min(6.0, 0.999 * law.radius)
        grid = np.linspace(-v_max, v_max, 241)
        vals = marginal_k(law, 1, grid)
        return [(n, v, p) for v, p in zip(grid.tolist(), vals.tolist())]

    blocks = _parallel_rows(rows_for, cfg.n_values, cfg.threads)
    rows = [row for block in blocks for row in block]
    _emit(cfg, "marginal", ("N", "v", "pi1"), rows, "marginal")
    return 0


def _cmd_chaos(cfg: ExperimentConfig) -> int:
    _require_counts(cfg, "chaos")
    model = make_model(cfg.model)
    rows = _parallel_rows(
        lambda n: _chaos_row(model, n, cfg), cfg.n_values, cfg.threads
    )
    _emit(cfg, "chaos", _CHAOS_HEADER, rows, "chaos")
    return 0


def _cmd_highfreq(cfg: ExperimentConfig, betas: tuple[float, ...]) -> int:
    model = make_model(cfg.model)
    rows = [(b, highfreq_gap(model, b)) for b in betas]
    _emit(cfg, "highfreq", ("beta", "gap"), rows, "highfreq")
    return 0


def _cmd_fda(cfg: ExperimentConfig, betas: tuple[float, ...]) -> int:
    model = make_model(cfg.model)
    params = _fitted_params(model)
    rows = [(b, omega(model, params, b).omega) for b in betas]
    _emit(cfg, "fda", ("beta", "omega"), rows, "fda")
    return 0


def _cmd_cross_entropy(cfg: ExperimentConfig) -> int:
    _require_counts(cfg, "cross-entropy")
    model = make_model(cfg.model)
    gauss = make_model("gauss")
    target = relative_entropy(gauss, model)
    rows = _parallel_rows(
        lambda n: (
            n,
            cross_entropy_per_particle(
                gauss, model, n, force_cutoff=cfg.force_cutoff
            ),
            target,
        ),
        cfg.n_values,
        cfg.threads,
    )
    _emit(cfg, "cross_entropy", ("N", "value", "target"), rows, "cross-entropy")
    return 0


def _strictly_decreasing(vals: list[float]) -> bool:
    return all(b < a for a, b in zip(vals, vals[1:]))


def _cmd_sweep(cfg: ExperimentConfig) -> int:
    _require_counts(cfg, "sweep")
    model = make_model(cfg.model)
    params = _fitted_params(model)

    def job(n: int):
        rec = _clt_row(model, n, params, cfg)
        chaos = _chaos_row(model, n, cfg)
        probe = omega(model, params, rec.beta_N)
        return rec, chaos, probe.omega

    results = _parallel_rows(job, cfg.n_values, cfg.threads)
    header = _CLT_HEADER + _CHAOS_HEADER[1:] + ("omega", "row_status")
    rows: list[tuple] = []
    for rec, chaos, om in results:
        status = "PASS" if rec.trusted else "FAIL"
        rows.append(
            (rec.N, rec.sup_err, rec.gamma0_ratio, rec.xi_max, rec.beta_N,
             rec.trusted) + chaos[1:] + (om, status)
        )
    sup_errs = [r.sup_err for r, _, _ in results]
    ratios = [r.gamma0_ratio for r, _, _ in results]
    l1s = [c[1] for _, c, _ in results]
    gaps = [abs(c[3] - c[4]) for _, c, _ in results]
    margins = [c[6] for _, c, _ in results]
    omegas = [om for _, _, om in results]
    checks = [
        ("sup_err_decreasing", _strictly_decreasing(sup_errs)),
        (
            "gamma0_ratio_window",
            all(_GAMMA0_WINDOW[0] <= r <= _GAMMA0_WINDOW[1] for r in ratios),
        ),
        ("rows_trusted", all(r.trusted for r, _, _ in results)),
        ("l1_k1_decreasing", _strictly_decreasing(l1s)),
        ("entropy_gap_decreasing", _strictly_decreasing(gaps)),
        ("pinsker_nonnegative", all(m >= _PINSKER_SLACK for m in margins)),
        ("omega_decreasing", _strictly_decreasing(omegas)),
    ]
    blank = ("",) * (len(header) - 2)
    for name, ok in checks:
        rows.append((f"check:{name}",) + blank + ("PASS" if ok else "FAIL",))
    _emit(cfg, "sweep", header, rows, "sweep")
    return 0


def _cmd_stable_density(args: argparse.Namespace) -> int:
    params = StableParams(
        sigma=args.sigma, alpha=args.alpha, beta=args.beta
    )
    xs = args.x
    if not xs:
        raise InputValidationError("--x requires at least one point")
    vals = [float(stable_density(params, x)) for x in xs]
    for val in vals:
        print(_fmt(val))
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "stable_density.csv"
        path.write_text(
            _csv_text(("x", "density"), list(zip(xs, vals))),
            encoding="ascii",
            newline="",
        )
        print(f"wrote {path}")
    return 0


# ----------------------------------------------------------------------
# Argument parsing and config assembly
# ----------------------------------------------------------------------


def _parse_counts(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        values = sorted({int(piece) for piece in text.split(",")})
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected a comma-separated list of integers, got {text!r}"
        ) from None
    return tuple(values)


def _parse_floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(float(piece) for piece in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected a comma-separated list of numbers, got {text!r}"
        ) from None


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--model", default=None, help="model name, e.g. quartic, gauss, power-tail:1.5, mixture:0.25")
    sub.add_argument("--n", type=_parse_counts, default=None, metavar="LIST",
                     help="comma-separated particle counts, e.g. 16,64,256")
    sub.add_argument("--grid-pow", type=int, default=None,
                     help="log2 of the sup-norm grid size (9..22)")
    sub.add_argument("--tau", type=float, default=None,
                     help="cutoff exponent (positive)")
    sub.add_argument("--out", default=None, help="output directory for CSV artifacts")
    sub.add_argument("--threads", type=int, default=None, help="worker count")
    sub.add_argument("--force-cutoff", action="store_true", default=None,
                     help="accept untrusted frequency cutoffs and mark the rows")
    sub.add_argument("--config", default=None,
                     help="plain-text config file with key = value lines")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levy-kac",
        description="Experiments over model × N grids with deterministic CSV artifacts.",
    )
    subs = parser.add_subparsers(dest="subcommand", required=True)
    for name in (
        "density-info",
        "clt",
        "marginal",
        "chaos",
        "cross-entropy",
        "sweep",
    ):
        _add_common(subs.add_parser(name))
    for name in ("highfreq", "fda"):
        sub = subs.add_parser(name)
        _add_common(sub)
        sub.add_argument("--beta", type=_parse_floats, default=None, metavar="LIST",
                         help="comma-separated frequency cutoffs")
    sd = subs.add_parser("stable-density")
    sd.add_argument("--alpha", type=float, required=True)
    sd.add_argument("--sigma", type=float, required=True)
    sd.add_argument("--beta", type=float, required=True)
    sd.add_argument("--x", type=_parse_floats, required=True, metavar="LIST")
    sd.add_argument("--out", default=None)
    return parser


_CONFIG_KEYS = ("model", "n", "grid_pow", "tau", "out", "threads", "force_cutoff", "beta")


def _read_config_file(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputValidationError(f"cannot read config file {path!r}: {exc}") from None
    values: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InputValidationError(f"malformed config line (need key = value): {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise InputValidationError(f"unknown config key {key!r}")
        values[key] = value.strip()
    return values


def _parse_bool(text: str, what: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise InputValidationError(f"{what} must be a boolean, got {text!r}")


def _coerce(parse, text: str, what: str):
    try:
        return parse(text)
    except argparse.ArgumentTypeError as exc:
        raise InputValidationError(f"{what}: {exc}") from None
    except ValueError:
        raise InputValidationError(f"{what}: cannot parse {text!r}") from None


def _assemble(args: argparse.Namespace) -> tuple[ExperimentConfig, dict[str, str]]:
    file_vals = _read_config_file(args.config) if args.config else {}

    def pick(flag, key: str, parse, default):
        if flag is not None:
            return flag
        if key in file_vals:
            return _coerce(parse, file_vals[key], f"config key {key!r}")
        return default

    threads_default = 1
    env_threads = os.environ.get("LEVY_KAC_THREADS")
    if env_threads is not None:
        threads_default = _coerce(int, env_threads, "LEVY_KAC_THREADS")

    model = pick(args.model, "model", str, None)
    if model is None:
        raise InputValidationError("--model is required (flag or config file)")
    cfg = ExperimentConfig(
        model=model,
        n_values=pick(args.n, "n", _parse_counts, ()),
        grid_pow=pick(args.grid_pow, "grid_pow", int, 11),
        tau=pick(args.tau, "tau", float, 0.1),
        out_dir=Path(pick(args.out, "out", str, ".")),
        threads=pick(args.threads, "threads", int, threads_default),
        force_cutoff=pick(
            args.force_cutoff,
            "force_cutoff",
            lambda t: _parse_bool(t, "config key 'force_cutoff'"),
            False,
        ),
    )
    return cfg, file_vals


def run(subcommand: str, config: ExperimentConfig, **extra) -> int:
    """Programmatic entry: dispatch one subcommand on a validated config."""
    if subcommand == "density-info":
        return _cmd_density_info(config)
    if subcommand == "clt":
        return _cmd_clt(config)
    if subcommand == "marginal":
        return _cmd_marginal(config)
    if subcommand == "chaos":
        return _cmd_chaos(config)
    if subcommand == "highfreq":
        return _cmd_highfreq(config, extra.get("betas") or _HIGHFREQ_BETAS)
    if subcommand == "fda":
        return _cmd_fda(config, extra.get("betas") or _FDA_BETAS)
    if subcommand == "cross-entropy":
        return _cmd_cross_entropy(config)
    if subcommand == "sweep":
        return _cmd_sweep(config)
    raise InputValidationError(f"unknown subcommand {subcommand!r}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        if args.subcommand == "stable-density":
            return _cmd_stable_density(args)
        cfg, file_vals = _assemble(args)
        extra = {}
        if args.subcommand in ("highfreq", "fda"):
            betas = args.beta
            if betas is None and "beta" in file_vals:
                betas = _coerce(_parse_floats, file_vals["beta"], "config key 'beta'")
            extra["betas"] = betas
        return run(args.subcommand, cfg, **extra)
    except (InputValidationError, UnknownModelError, InvalidStableParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LevyKacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
