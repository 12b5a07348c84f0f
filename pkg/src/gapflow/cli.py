"""Command-line front end: simulate / verify / sweep / export.

Batch-only interface.  Configuration is flat INI text (sections + key = value)
with every key documented in configs/reference.ini; parsing validates the full
config up front and reports *all* violations at once.  Simulation runs are
seed-free and deterministic: identical config text produces byte-identical
series and record files.  Randomness (with a documented seed) appears only in
the verification suites.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from . import dispersive as dp
from . import reynolds as ry
from . import spectral as sp
from . import verify as vf
from .dispersive import ModelParams
from .reynolds import CoupledState, DriverConfig, RunReport
from .spectral import BoundaryLift, GridField, StateVW

SCHEMA_VERSION = "1.0"

SERIES_COLUMNS = ("t", "min_w", "max_u", "mass_residual", "norm_X", "contraction_ratio")
SNAPSHOT_COLUMNS = ("t", "field", "index", "value")
SWEEP_COLUMNS = ("beta_F", "beta_p", "termination", "T_used", "quench_time", "note")

VERIFY_SUITES = ("semigroup", "benchmark", "constants", "lipschitz", "elliptic", "convergence", "all")


class ConfigError(ValueError):
    """Raised by parse_config with the complete list of violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "invalid configuration:\n" + "\n".join(f"  - {v}" for v in self.violations)
        )


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved, validated run configuration.

    T is always the numeric horizon; T_source records whether it came from the
    config verbatim or from the constructive horizon estimate ("auto").  For
    file-loaded initial data the arrays live in init_arrays and the file's
    content hash enters the canonical echo (and thus the config hash).
    """

    beta_F: float
    beta_p: float
    theta1: float
    theta2: float
    eps1: float
    init_kind: str
    u_amp: float
    w_amp: float
    v_amp: float
    init_file: str
    k_max: int
    n: int
    N_t: int
    T: float
    T_source: str
    tol: float
    max_iter: int
    quench_eps: float | None
    u_cap: float | None
    chunk_init: float | None
    chunk_cap: float | None
    outdir: str
    snapshots: tuple
    seed: int
    sweep_beta_F: tuple
    sweep_beta_p: tuple
    init_arrays: tuple | None = field(default=None, repr=False, compare=False)
    init_file_sha256: str = ""

    def canonical(self) -> str:
        """Deterministic full echo: every key explicit, defaults filled, T resolved."""

        def opt(x):
            return "" if x is None else repr(float(x))

        lines = [
            "[params]",
            f"beta_F = {float(self.beta_F)!r}",
            f"beta_p = {float(self.beta_p)!r}",
            f"theta1 = {float(self.theta1)!r}",
            f"theta2 = {float(self.theta2)!r}",
            f"eps1 = {float(self.eps1)!r}",
            "",
            "[init]",
            f"kind = {self.init_kind}",
            f"u_amp = {float(self.u_amp)!r}",
            f"w_amp = {float(self.w_amp)!r}",
            f"v_amp = {float(self.v_amp)!r}",
            f"file = {self.init_file}",
            f"file_sha256 = {self.init_file_sha256}",
            "",
            "[discretization]",
            f"k_max = {self.k_max}",
            f"n = {self.n}",
            f"N_t = {self.N_t}",
            "",
            "[run]",
            f"T = {float(self.T)!r}",
            f"T_source = {self.T_source}",
            f"tol = {float(self.tol)!r}",
            f"max_iter = {self.max_iter}",
            f"quench_eps = {opt(self.quench_eps)}",
            f"u_cap = {opt(self.u_cap)}",
            f"chunk_init = {opt(self.chunk_init)}",
            f"chunk_cap = {opt(self.chunk_cap)}",
            "",
            "[output]",
            f"outdir = {self.outdir}",
            "snapshots = " + ",".join(repr(float(t)) for t in self.snapshots),
            f"seed = {self.seed}",
            "",
            "[sweep]",
            "beta_F_values = " + ",".join(repr(float(b)) for b in self.sweep_beta_F),
            "beta_p_values = " + ",".join(repr(float(b)) for b in self.sweep_beta_p),
            "",
        ]
        return "\n".join(lines)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()

    def model_params(self) -> ModelParams:
        return ModelParams(
            beta_F=self.beta_F,
            beta_p=self.beta_p,
            lift=BoundaryLift(self.theta1, self.theta2),
            eps1=self.eps1,
        )

    def initial_state(self) -> CoupledState:
        if self.init_kind == "file":
            u_vals, v_modes, w_modes = (np.asarray(a, dtype=float) for a in self.init_arrays)
        else:
            u_vals = np.full(self.n, self.theta1)
            v_modes = np.zeros(self.k_max)
            w_modes = np.zeros(self.k_max)
            if self.init_kind == "single-bump":
                u_vals = u_vals + self.u_amp * np.sin(np.pi * sp.grid(self.n))
                w_modes[0] = self.w_amp
                v_modes[0] = self.v_amp
        return CoupledState(
            u=GridField(values=u_vals, bv=self.theta1),
            vw=StateVW(v=v_modes, w=w_modes),
        )

    def driver_config(self) -> DriverConfig:
        return DriverConfig(
            n_t=self.N_t,
            tol=self.tol,
            max_iter=self.max_iter,
            quench_eps=self.quench_eps,
            u_cap=self.u_cap,
            chunk_init=self.chunk_init,
            chunk_cap=self.chunk_cap,
        )


_SCHEMA = {
    "params": ("beta_F", "beta_p", "theta1", "theta2", "eps1"),
    "init": ("kind", "u_amp", "w_amp", "v_amp", "file", "file_sha256"),
    "discretization": ("k_max", "n", "N_t"),
    "run": ("T", "T_source", "tol", "max_iter", "quench_eps", "u_cap", "chunk_init", "chunk_cap"),
    "output": ("outdir", "snapshots", "seed"),
    "sweep": ("beta_F_values", "beta_p_values"),
}

_DEFAULTS = {
    ("params", "beta_F"): "1.0",
    ("params", "beta_p"): "0.5",
    ("params", "theta1"): "1.0",
    ("params", "theta2"): "1.0",
    ("params", "eps1"): "0.5",
    ("init", "kind"): "single-bump",
    ("init", "u_amp"): "0.1",
    ("init", "w_amp"): "0.05",
    ("init", "v_amp"): "0.0",
    ("init", "file"): "",
    ("init", "file_sha256"): "",
    ("discretization", "k_max"): "48",
    ("discretization", "n"): "48",
    ("discretization", "N_t"): "32",
    ("run", "T"): "0.02",
    ("run", "T_source"): "",
    ("run", "tol"): "1e-9",
    ("run", "max_iter"): "40",
    ("run", "quench_eps"): "",
    ("run", "u_cap"): "",
    ("run", "chunk_init"): "",
    ("run", "chunk_cap"): "",
    ("output", "outdir"): "out",
    ("output", "snapshots"): "",
    ("output", "seed"): "0",
    ("sweep", "beta_F_values"): "",
    ("sweep", "beta_p_values"): "",
}


def _resolve_auto_T(p: ModelParams, init: CoupledState) -> float:
    """Constructive horizon: T0 from the contraction constants of the initial data."""
    n = init.u.n
    w0 = GridField(
        values=ry._modes_to_grid(init.vw.w, n, lift=p.lift.theta2), bv=p.lift.theta2
    )
    cc = dp.contraction_constants(p, w0)
    r = 0.9 * cc.r_max
    spec = sp.plate_eigenvalues(init.vw.k_max)
    delta_o = dp.delta_o_bound(init.vw, spec, r)
    return float(dp.estimate_T0(p, w0, init.u, r, M0=1.0, delta_o=delta_o))


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate flat INI config text; raise ConfigError listing
    every violation (unknown sections/keys, conversion failures, semantic
    constraints) rather than stopping at the first."""
    violations = []
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc!s}".replace("\n", " ")]) from exc

    raw = dict(_DEFAULTS)
    for section in cp.sections():
        if section not in _SCHEMA:
            violations.append(f"unknown section [{section}]")
            continue
        for key, value in cp.items(section):
            if key not in _SCHEMA[section]:
                violations.append(f"unknown key {section}.{key}")
            else:
                raw[(section, key)] = value.strip()

    def take_float(sec, key, allow_empty=False):
        s = raw[(sec, key)]
        if s == "":
            if allow_empty:
                return None
            violations.append(f"{sec}.{key}: value required")
            return math.nan
        try:
            return float(s)
        except ValueError:
            violations.append(f"{sec}.{key}: not a number (got {s!r})")
            return math.nan

    def take_int(sec, key):
        s = raw[(sec, key)]
        try:
            return int(s)
        except ValueError:
            violations.append(f"{sec}.{key}: not an integer (got {s!r})")
            return 0

    def take_float_list(sec, key):
        s = raw[(sec, key)]
        if s == "":
            return ()
        out = []
        for piece in s.split(","):
            try:
                out.append(float(piece.strip()))
            except ValueError:
                violations.append(f"{sec}.{key}: not a number (got {piece.strip()!r})")
        return tuple(out)

    beta_F = take_float("params", "beta_F")
    beta_p = take_float("params", "beta_p")
    theta1 = take_float("params", "theta1")
    theta2 = take_float("params", "theta2")
    eps1 = take_float("params", "eps1")
    init_kind = raw[("init", "kind")]
    u_amp = take_float("init", "u_amp")
    w_amp = take_float("init", "w_amp")
    v_amp = take_float("init", "v_amp")
    init_file = raw[("init", "file")]
    file_sha_given = raw[("init", "file_sha256")].strip().lower()
    k_max = take_int("discretization", "k_max")
    n = take_int("discretization", "n")
    N_t = take_int("discretization", "N_t")
    T_raw = raw[("run", "T")]
    T_source_raw = raw[("run", "T_source")].strip().lower()
    tol = take_float("run", "tol")
    max_iter = take_int("run", "max_iter")
    quench_eps = take_float("run", "quench_eps", allow_empty=True)
    u_cap = take_float("run", "u_cap", allow_empty=True)
    chunk_init = take_float("run", "chunk_init", allow_empty=True)
    chunk_cap = take_float("run", "chunk_cap", allow_empty=True)
    outdir = raw[("output", "outdir")]
    snapshots = take_float_list("output", "snapshots")
    seed = take_int("output", "seed")
    sweep_bF = take_float_list("sweep", "beta_F_values")
    sweep_bp = take_float_list("sweep", "beta_p_values")

    # semantic validation (mirrors every model/driver invariant checked downstream)
    if np.isfinite(beta_F) and beta_F < 0:
        violations.append(f"params.beta_F: must be >= 0 (got {beta_F!r})")
    if np.isfinite(beta_p) and beta_p < 0:
        violations.append(f"params.beta_p: must be >= 0 (got {beta_p!r})")
    if np.isfinite(theta1) and theta1 <= 0:
        violations.append(f"params.theta1: must be > 0 (got {theta1!r})")
    if np.isfinite(theta2) and theta2 <= 0:
        violations.append(f"params.theta2: must be > 0 (got {theta2!r})")
    if np.isfinite(eps1) and eps1 <= 0:
        violations.append(f"params.eps1: must be > 0 (got {eps1!r})")
    if init_kind not in ("constant", "single-bump", "file"):
        violations.append(
            f"init.kind: must be one of constant, single-bump, file (got {init_kind!r})"
        )
    if k_max < 1:
        violations.append(f"discretization.k_max: must be >= 1 (got {k_max})")
    if n < 1:
        violations.append(f"discretization.n: must be >= 1 (got {n})")
    if k_max >= 1 and n >= 1 and n != k_max:
        violations.append(
            f"discretization: the coupled driver requires n == k_max (got n={n}, k_max={k_max})"
        )
    if N_t < 1:
        violations.append(f"discretization.N_t: must be >= 1 (got {N_t})")
    if not (np.isfinite(tol) and tol > 0):
        violations.append(f"run.tol: must be > 0 (got {raw[('run', 'tol')]!r})")
    if max_iter < 1:
        violations.append(f"run.max_iter: must be >= 1 (got {max_iter})")
    for name, val in (("quench_eps", quench_eps), ("u_cap", u_cap), ("chunk_init", chunk_init), ("chunk_cap", chunk_cap)):
        if val is not None and not (np.isfinite(val) and val > 0):
            violations.append(f"run.{name}: must be > 0 when given (got {val!r})")
    if seed < 0:
        violations.append(f"output.seed: must be >= 0 (got {seed})")
    if T_source_raw not in ("", "explicit", "auto"):
        violations.append(
            f"run.T_source: must be explicit or auto when given (got {T_source_raw!r})"
        )

    init_arrays = None
    file_sha = ""
    if init_kind != "file":
        if init_file:
            violations.append("init.file: only valid with kind = file")
        if file_sha_given:
            violations.append("init.file_sha256: only valid with kind = file")
    else:
        if not init_file:
            violations.append("init.file: path required for kind = file")
        elif not os.path.isfile(init_file):
            violations.append(f"init.file: no such file (got {init_file!r})")
        else:
            blob = open(init_file, "rb").read()
            file_sha = hashlib.sha256(blob).hexdigest()
            if file_sha_given and file_sha_given != file_sha:
                violations.append(
                    "init.file_sha256: content hash mismatch "
                    f"(config says {file_sha_given[:12]}..., file has {file_sha[:12]}...)"
                )
            try:
                data = np.load(init_file)
                u_vals = np.asarray(data["u_values"], dtype=float)
                v_modes = np.asarray(data["v_modes"], dtype=float)
                w_modes = np.asarray(data["w_modes"], dtype=float)
            except Exception as exc:
                violations.append(
                    f"init.file: expected .npz with u_values, v_modes, w_modes ({exc!s})"
                )
            else:
                if u_vals.shape != (n,):
                    violations.append(
                        f"init.file: u_values must have shape ({n},), got {u_vals.shape}"
                    )
                if v_modes.shape != (k_max,) or w_modes.shape != (k_max,):
                    violations.append(
                        f"init.file: v_modes/w_modes must have shape ({k_max},)"
                    )
                if not (
                    np.all(np.isfinite(u_vals))
                    and np.all(np.isfinite(v_modes))
                    and np.all(np.isfinite(w_modes))
                ):
                    violations.append("init.file: arrays must be finite")
                if not violations:
                    init_arrays = (tuple(u_vals), tuple(v_modes), tuple(w_modes))

    # Horizon: explicit positive number, or "auto" via the constructive
    # estimate.  A numeric T together with T_source = auto is the canonical
    # echo of an already-resolved auto horizon and is taken as-is, so the
    # echo re-parses to the identical configuration.
    T = math.nan
    T_source = "explicit"
    needs_resolution = False
    if T_raw.strip().lower() == "auto":
        T_source = "auto"
        needs_resolution = True
    else:
        try:
            T = float(T_raw)
        except ValueError:
            violations.append(f"run.T: must be a positive number or 'auto' (got {T_raw!r})")
        else:
            if not (np.isfinite(T) and T > 0):
                violations.append(f"run.T: must be > 0 (got {T!r})")
            if T_source_raw == "auto":
                T_source = "auto"

    if violations:
        raise ConfigError(violations)

    cfg = RunConfig(
        beta_F=beta_F,
        beta_p=beta_p,
        theta1=theta1,
        theta2=theta2,
        eps1=eps1,
        init_kind=init_kind,
        u_amp=u_amp,
        w_amp=w_amp,
        v_amp=v_amp,
        init_file=init_file,
        k_max=k_max,
        n=n,
        N_t=N_t,
        T=T,
        T_source=T_source,
        tol=tol,
        max_iter=max_iter,
        quench_eps=quench_eps,
        u_cap=u_cap,
        chunk_init=chunk_init,
        chunk_cap=chunk_cap,
        outdir=outdir,
        snapshots=snapshots,
        seed=seed,
        sweep_beta_F=sweep_bF,
        sweep_beta_p=sweep_bp,
        init_arrays=init_arrays,
        init_file_sha256=file_sha,
    )

    if needs_resolution:
        try:
            T_res = _resolve_auto_T(cfg.model_params(), cfg.initial_state())
        except Exception as exc:
            raise ConfigError([f"run.T: auto horizon resolution failed ({exc!s})"]) from exc
        if not (np.isfinite(T_res) and T_res > 0):
            raise ConfigError([f"run.T: auto horizon resolved to {T_res!r}"])
        cfg = replace(cfg, T=T_res)

    bad_snaps = [t for t in cfg.snapshots if not (0.0 <= t <= cfg.T * (1 + 1e-12))]
    if bad_snaps:
        raise ConfigError(
            [f"output.snapshots: time {t!r} outside [0, T={cfg.T!r}]" for t in bad_snaps]
        )
    return cfg


# ---------------------------------------------------------------------------
# run records and export
# ---------------------------------------------------------------------------


@dataclass
class RunRecord:
    """One executed simulation: config identity, report, snapshots, file refs."""

    config_hash: str
    report: RunReport
    snapshots: tuple
    code_version: str
    canonical_config: str
    files: dict = field(default_factory=dict)


def _fmt(x) -> str:
    return "%.17g" % float(x)


def _snapshot_at(report: RunReport, t_req: float) -> dict:
    ts = np.array([s.t for s in report.states])
    i = int(np.argmin(np.abs(ts - t_req)))
    s = report.states[i]
    return {
        "t_requested": float(t_req),
        "t": float(s.t),
        "u": [float(v) for v in s.u.values],
        "v": [float(v) for v in s.vw.v],
        "w": [float(v) for v in s.vw.w],
    }


def _execute(cfg: RunConfig) -> RunRecord:
    report = ry.run_coupled(cfg.model_params(), cfg.initial_state(), cfg.T, cfg.driver_config())
    snap_times = cfg.snapshots if cfg.snapshots else (0.0, report.final_state.t)
    snaps = tuple(_snapshot_at(report, t) for t in snap_times)
    return RunRecord(
        config_hash=cfg.config_hash,
        report=report,
        snapshots=snaps,
        code_version=__version__,
        canonical_config=cfg.canonical(),
    )


def _record_payload(record: RunRecord) -> dict:
    rep = record.report
    return {
        "schema_version": SCHEMA_VERSION,
        "config_hash": record.config_hash,
        "code_version": record.code_version,
        "termination": rep.termination,
        "T": float(rep.T),
        "T_used": float(rep.T_used),
        "quench_time": None if rep.quench_time is None else float(rep.quench_time),
        "quench_eps": float(rep.quench_eps),
        "u_cap": float(rep.u_cap),
        "note": rep.note,
        "k_max": rep.k_max,
        "n": rep.n,
        "n_t": rep.n_t,
        "tol": float(rep.tol),
        "compat_proxy": float(rep.compat_proxy),
        "series": {
            "t": [float(r.t) for r in rep.series],
            "min_w": [float(r.min_w) for r in rep.series],
            "max_u": [float(r.max_u) for r in rep.series],
            "mass_residual": [float(r.mass_residual) for r in rep.series],
            "norm_X": [float(r.norm_X) for r in rep.series],
            "contraction_ratio": [float(r.contraction_ratio) for r in rep.series],
        },
        "snapshots": list(record.snapshots),
    }


def export(record: RunRecord, fmt: str, outdir: str) -> dict:
    """Write the record in one format; returns {logical name: path}.

    csv: series.csv (columns exactly t,min_w,max_u,mass_residual,norm_X,
    contraction_ratio; floats %.17g) and snapshots.csv (t,field,index,value;
    field in {u, v, w}, u indexed by grid node, v/w by mode number).
    json: record.json (schema_version-tagged, sorted keys, NaN for undefined).
    """
    os.makedirs(outdir, exist_ok=True)
    files = {}
    if fmt == "csv":
        series_path = os.path.join(outdir, "series.csv")
        with open(series_path, "w", encoding="utf-8") as fh:
            fh.write(",".join(SERIES_COLUMNS) + "\n")
            for r in record.report.series:
                fh.write(
                    ",".join(
                        _fmt(x)
                        for x in (
                            r.t,
                            r.min_w,
                            r.max_u,
                            r.mass_residual,
                            r.norm_X,
                            r.contraction_ratio,
                        )
                    )
                    + "\n"
                )
        snap_path = os.path.join(outdir, "snapshots.csv")
        with open(snap_path, "w", encoding="utf-8") as fh:
            fh.write(",".join(SNAPSHOT_COLUMNS) + "\n")
            for snap in record.snapshots:
                for fname in ("u", "v", "w"):
                    for i, val in enumerate(snap[fname], start=1):
                        fh.write(f"{_fmt(snap['t'])},{fname},{i},{_fmt(val)}\n")
        files["series"] = series_path
        files["snapshots"] = snap_path
    elif fmt == "json":
        path = os.path.join(outdir, "record.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_record_payload(record), fh, sort_keys=True, indent=1)
            fh.write("\n")
        files["record"] = path
    else:
        raise ValueError(f"unknown export format {fmt!r} (expected csv or json)")
    record.files.update(files)
    return files


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig, out: str | None = None, quiet: bool = False) -> RunRecord:
    """Run the coupled driver and write echo + record + series + snapshots."""
    outdir = out or cfg.outdir
    record = _execute(cfg)
    os.makedirs(outdir, exist_ok=True)
    echo_path = os.path.join(outdir, "config_echo.ini")
    with open(echo_path, "w", encoding="utf-8") as fh:
        fh.write(record.canonical_config)
    record.files["config_echo"] = echo_path
    export(record, "csv", outdir)
    export(record, "json", outdir)
    if not quiet:
        rep = record.report
        qt = "-" if rep.quench_time is None else _fmt(rep.quench_time)
        print(
            f"simulate: termination={rep.termination} T_used={_fmt(rep.T_used)} "
            f"quench_time={qt} files in {outdir}"
        )
    return record


@dataclass(frozen=True)
class SweepCell:
    beta_F: float
    beta_p: float
    termination: str
    T_used: float
    quench_time: float | None
    note: str


@dataclass
class SweepResult:
    cells: tuple
    monotonic: bool
    monotonicity_notes: tuple
    csv_path: str


def _monotonicity_scan(cells) -> tuple:
    """Once quench appears along increasing beta_F (fixed beta_p) it should persist."""
    notes = []
    by_bp = {}
    for c in cells:
        by_bp.setdefault(c.beta_p, []).append(c)
    for bp in sorted(by_bp):
        row = sorted(by_bp[bp], key=lambda c: c.beta_F)
        seen_quench = None
        for c in row:
            if c.termination == "quench" and seen_quench is None:
                seen_quench = c.beta_F
            elif seen_quench is not None and c.termination != "quench":
                notes.append(
                    f"beta_p={c.beta_p!r}: quench at beta_F={seen_quench!r} but "
                    f"termination={c.termination} at beta_F={c.beta_F!r}"
                )
    return tuple(notes)


def cmd_sweep(cfg: RunConfig, out: str | None = None, jobs: int = 1, quiet: bool = False) -> SweepResult:
    """Run the beta_F x beta_p grid; each cell is an isolated simulate run.

    Partial failures are recorded per cell (termination = "error") and the
    sweep continues.  The quench-monotonicity diagnostic is logged, never
    asserted.  Cells re-resolve an "auto" horizon for their own parameters.
    """
    if not cfg.sweep_beta_F or not cfg.sweep_beta_p:
        raise ConfigError(
            ["sweep: beta_F_values and beta_p_values must both be nonempty for cmd_sweep"]
        )
    outdir = out or cfg.outdir
    os.makedirs(outdir, exist_ok=True)
    grid = sorted(
        (bf, bp) for bf in cfg.sweep_beta_F for bp in cfg.sweep_beta_p
    )

    def run_cell(pair):
        bf, bp = pair
        cell_cfg = replace(cfg, beta_F=bf, beta_p=bp, sweep_beta_F=(), sweep_beta_p=())
        cell_dir = os.path.join(outdir, f"bF_{bf!r}_bp_{bp!r}")
        try:
            if cfg.T_source == "auto":
                t_res = _resolve_auto_T(cell_cfg.model_params(), cell_cfg.initial_state())
                cell_cfg = replace(cell_cfg, T=float(t_res))
            record = cmd_simulate(cell_cfg, out=cell_dir, quiet=True)
            rep = record.report
            return SweepCell(bf, bp, rep.termination, float(rep.T_used), rep.quench_time, rep.note)
        except Exception as exc:  # partial failure: record and continue
            return SweepCell(bf, bp, "error", math.nan, None, str(exc).replace("\n", " ")[:200])

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cells = tuple(pool.map(run_cell, grid))
    else:
        cells = tuple(run_cell(pair) for pair in grid)

    csv_path = os.path.join(outdir, "sweep.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for c in cells:
            qt = "nan" if c.quench_time is None else _fmt(c.quench_time)
            note = c.note.replace(",", ";")
            fh.write(
                f"{_fmt(c.beta_F)},{_fmt(c.beta_p)},{c.termination},{_fmt(c.T_used)},{qt},{note}\n"
            )
    notes = _monotonicity_scan(cells)
    result = SweepResult(
        cells=cells, monotonic=not notes, monotonicity_notes=notes, csv_path=csv_path
    )
    if not quiet:
        for c in cells:
            print(
                f"sweep: beta_F={c.beta_F!r} beta_p={c.beta_p!r} -> {c.termination}"
                + (f" (quench_time={_fmt(c.quench_time)})" if c.quench_time is not None else "")
            )
        if notes:
            for line in notes:
                print(f"sweep: monotonicity flag: {line}")
        else:
            print("sweep: quench monotonicity holds along sampled beta_F rays")
    return result


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound: float
    note: str = ""


def _suite_semigroup(seed: int) -> list:
    k = 256
    spec = sp.plate_eigenvalues(k)
    rng = np.random.default_rng(seed)
    decay = np.arange(1, k + 1, dtype=float) ** -2.0
    times = np.linspace(0.0, 100.0, 33)[1:]
    worst = 0.0
    for _ in range(100):
        s0 = StateVW(v=rng.normal(size=k) * decay, w=rng.normal(size=k) * decay)
        base = sp.norm_X(s0, spec)
        for t in times:
            drift = abs(sp.norm_X(sp.semigroup_apply(s0, spec, float(t)), spec) - base)
            worst = max(worst, drift / base)
    results = [CheckResult("semigroup.norm_conservation", worst <= 1e-10, worst, 1e-10)]
    s0 = StateVW(v=rng.normal(size=k) * decay, w=rng.normal(size=k) * decay)
    ab = sp.semigroup_apply(sp.semigroup_apply(s0, spec, 0.7), spec, 2.6)
    direct = sp.semigroup_apply(s0, spec, 3.3)
    gap = max(float(np.abs(ab.v - direct.v).max()), float(np.abs(ab.w - direct.w).max()))
    scale = max(float(np.abs(direct.v).max()), float(np.abs(direct.w).max()))
    # top-mode phases reach (k pi)^4 * t ~ 1e10, so trig argument reduction
    # alone costs ~1e-10 relative; 1e-8 leaves margin without hiding real bugs
    results.append(CheckResult("semigroup.cocycle", gap <= 1e-8 * scale, gap / scale, 1e-8))
    return results


def _suite_benchmark(seed: int) -> list:
    gap = vf.benchmark_against_duhamel(128, 1.0, 256)
    results = [CheckResult("benchmark.closed_form_gap", gap <= 1e-10, gap, 1e-10)]
    fit = vf.regularity_exponent_fit(vf.linear_plate_closed_form(0.37, 128).w)
    ok = 4.7 <= fit.exponent <= 5.3 and fit.conclusive
    results.append(
        CheckResult(
            "benchmark.regularity_exponent",
            ok,
            fit.exponent,
            5.3,
            note=f"residual={fit.residual:.3g}",
        )
    )
    return results


_SUITE_PARAMS = ModelParams(
    beta_F=1.0, beta_p=0.5, lift=BoundaryLift(1.0, 1.0), eps1=0.5
)


def _suite_constants(seed: int) -> list:
    alg = vf.algebra_property_check(trials=10_000, seed=seed)
    results = [
        CheckResult(
            "constants.algebra",
            alg.passed,
            alg.worst_fresh,
            alg.C_alg,
            note=f"{alg.trials} fresh draws",
        )
    ]
    w0 = GridField(values=np.full(32, 1.0), bv=1.0)
    inv = vf.inverse_power_bounds_check(_SUITE_PARAMS, w0, trials=1000, seed=seed + 1)
    worst = max(max(inv.worst_single), inv.worst_diff1, inv.worst_diff2)
    results.append(
        CheckResult(
            "constants.inverse_power",
            inv.passed,
            worst,
            1.0,
            note=f"C1={inv.C1:.4g} C2={inv.C2:.4g} C3={inv.C3:.4g}",
        )
    )
    return results


def _suite_lipschitz(seed: int) -> list:
    n = 32
    w0_flat = GridField(values=np.full(n, 1.0), bv=1.0)
    lg = vf.lipschitz_G_check(_SUITE_PARAMS, w0_flat, trials=1000, seed=seed)
    results = [
        CheckResult("lipschitz.G", lg.passed, lg.worst_ratio, lg.bound, note=f"{lg.trials} pairs")
    ]
    w0m = np.zeros(n)
    w0m[0] = 0.05
    w0 = GridField(values=ry._modes_to_grid(w0m, n, lift=1.0), bv=1.0)
    u0 = GridField(values=np.full(n, 1.0), bv=1.0)
    lf = vf.lipschitz_F_check(
        _SUITE_PARAMS, u0, w0, StateVW(v=np.zeros(n), w=w0m), trials=1000, seed=seed + 1
    )
    results.append(
        CheckResult("lipschitz.F", lf.passed, lf.worst_ratio, lf.bound, note=f"{lf.trials} pairs")
    )

    # Hoelder audit of the right-hand side: calibrate once, verify fresh
    T, n_t, alpha = 5e-3, 10, 0.2
    init = StateVW(v=np.zeros(n), w=w0m)
    rng = np.random.default_rng(seed + 2)
    qm = rng.normal(size=n) * np.arange(1, n + 1, dtype=float) ** -3
    q = np.array([qm * (1.0 + 0.2 * math.cos(2 * math.pi * i / n_t)) for i in range(n_t + 1)])

    def rand_path(rseed):
        r = np.random.default_rng(rseed)
        base = r.normal(size=n) * np.arange(1, n + 1, dtype=float) ** -3
        base = 0.05 * base / max(1e-12, sp.norm_Hk(base, 2))
        ts = np.linspace(0, T, n_t + 1)
        return dp.PressurePath(
            times=ts,
            samples=[
                GridField(
                    values=1.0
                    + ry._modes_to_grid(base * (1.0 + 0.3 * math.sin(2 * math.pi * t / T)), n),
                    bv=1.0,
                )
                for t in ts
            ],
        )

    cal = ry.holder_F_check(rand_path(seed + 3), q, alpha, T, _SUITE_PARAMS, init)
    ver = ry.holder_F_check(
        rand_path(seed + 4), q, alpha, T, _SUITE_PARAMS, init, L_A=2 * cal.L_A, L_B=2 * cal.L_B
    )
    worst = max(
        ver.measured_A / ver.bound_A if ver.bound_A > 0 else 0.0,
        ver.measured_B / ver.bound_B if ver.bound_B > 0 else 0.0,
    )
    results.append(
        CheckResult(
            "lipschitz.holder_F",
            ver.passed,
            worst,
            1.0,
            note=f"L_A={cal.L_A:.4g} L_B={cal.L_B:.4g} (2x margin)",
        )
    )
    return results


def _suite_elliptic(seed: int) -> list:
    rng = np.random.default_rng(seed)
    n = 48
    x = sp.grid(n)
    results = []
    worst_slack = math.inf
    all_passed = True
    for trial in range(5):
        u0 = 1.0 + 0.2 * np.sin(np.pi * x) * rng.uniform(-1, 1) + 0.1 * np.sin(2 * np.pi * x) * rng.uniform(-1, 1)
        w0 = 1.0 + 0.2 * np.sin(np.pi * x) * rng.uniform(-1, 1) + 0.1 * np.sin(3 * np.pi * x) * rng.uniform(-1, 1)
        v0 = 0.3 * np.sin(np.pi * x) * rng.uniform(-1, 1)
        op = ry.assemble_Pstar(
            GridField(values=u0, bv=1.0),
            GridField(values=v0, bv=0.0),
            GridField(values=w0, bv=1.0),
        )
        rep = ry.elliptic_form_check(op, trials=10_000, seed=seed + 10 + trial)
        all_passed = all_passed and rep.passed
        worst_slack = min(worst_slack, rep.worst_slack)
    results.append(
        CheckResult(
            "elliptic.coercivity",
            all_passed,
            worst_slack,
            0.0,
            note="5 triples x 10^4 trials; measured = worst slack (must stay >= bound)",
        )
    )
    op = ry.assemble_Pstar(
        GridField(values=np.ones(16), bv=1.0),
        GridField(values=np.zeros(16), bv=0.0),
        GridField(values=np.ones(16), bv=1.0),
    )
    sec = ry.sector_check(op)
    results.append(
        CheckResult(
            "elliptic.sector",
            np.isfinite(sec.M_bound) and sec.M_bound > 0,
            sec.M_bound,
            math.inf,
            note=f"angle={sec.angle:.4f}",
        )
    )
    return results


def _suite_convergence(seed: int) -> list:
    study = vf.convergence_study()
    bands = {
        "oracle_dt": (3.6, 4.4),
        "driver_h": (1.5, 2.5),
        "plate_k": (6.0, math.inf),
        "gamma_tol": (0.5, 1.5),
    }
    results = []
    for row in study.rows:
        lo, hi = bands[row.axis]
        results.append(
            CheckResult(
                f"convergence.{row.axis}",
                lo <= row.order <= hi,
                row.order,
                lo,
                note=f"errors={tuple(float(f'{e:.3e}') for e in row.errors)} (bound = lower edge)",
            )
        )
    return results


_SUITE_RUNNERS = {
    "semigroup": _suite_semigroup,
    "benchmark": _suite_benchmark,
    "constants": _suite_constants,
    "lipschitz": _suite_lipschitz,
    "elliptic": _suite_elliptic,
    "convergence": _suite_convergence,
}


@dataclass(frozen=True)
class VerifySummary:
    suite: str
    results: tuple
    passed: bool


def cmd_verify(suite: str, seed: int = 0, out: str | None = None, quiet: bool = False) -> VerifySummary:
    """Run one named verification suite (or all); returns the summary.

    The summary is also written as JSON (schema_version-tagged) to
    <out>/verify_<suite>.json when an output directory is given.
    """
    if suite not in VERIFY_SUITES:
        raise ValueError(
            f"unknown suite {suite!r} (expected one of {', '.join(VERIFY_SUITES)})"
        )
    names = [s for s in VERIFY_SUITES if s != "all"] if suite == "all" else [suite]
    results = []
    for name in names:
        results.extend(_SUITE_RUNNERS[name](seed))
    summary = VerifySummary(
        suite=suite, results=tuple(results), passed=all(bool(r.passed) for r in results)
    )
    if not quiet:
        for r in summary.results:
            mark = "PASS" if r.passed else "FAIL"
            note = f" [{r.note}]" if r.note else ""
            print(f"[{mark}] {r.name}: measured={r.measured:.6g} bound={r.bound:.6g}{note}")
        failed = sum(not r.passed for r in summary.results)
        print(f"suite {suite}: {len(summary.results)} checks, {failed} failed")
    if out is not None:
        os.makedirs(out, exist_ok=True)
        path = os.path.join(out, f"verify_{suite}.json")
        payload = {
            "schema_version": SCHEMA_VERSION,
            "suite": suite,
            "passed": summary.passed,
            "results": [
                {
                    "name": r.name,
                    "passed": bool(r.passed),
                    "measured": float(r.measured),
                    "bound": float(r.bound),
                    "note": r.note,
                }
                for r in summary.results
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")
    return summary


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gapflow",
        description="Simulate and verify the coupled gas-film / pinned-plate model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run the coupled driver from a config file")
    p_sim.add_argument("--config", required=True, help="path to the INI config")
    p_sim.add_argument("--out", default=None, help="output directory (default: config outdir)")

    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument(
        "--suite", default="all", help="one of " + ", ".join(VERIFY_SUITES)
    )
    p_ver.add_argument("--out", default=None, help="directory for the JSON summary")
    p_ver.add_argument("--seed", type=int, default=0, help="Monte Carlo seed")

    p_swp = sub.add_parser("sweep", help="run a beta_F x beta_p grid of simulations")
    p_swp.add_argument("--config", required=True)
    p_swp.add_argument("--out", default=None)
    p_swp.add_argument("--jobs", type=int, default=1, help="parallel sweep cells")

    p_exp = sub.add_parser("export", help="re-run a config and write one format")
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--format", required=True, choices=("csv", "json"))
    p_exp.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            cmd_simulate(_load_config(args.config), out=args.out)
            return 0
        if args.command == "verify":
            summary = cmd_verify(args.suite, seed=args.seed, out=args.out)
            return 0 if summary.passed else 1
        if args.command == "sweep":
            cmd_sweep(_load_config(args.config), out=args.out, jobs=args.jobs)
            return 0
        if args.command == "export":
            cfg = _load_config(args.config)
            record = _execute(cfg)
            files = export(record, args.format, args.out or cfg.outdir)
            for name, path in sorted(files.items()):
                print(f"export: {name} -> {path}")
            return 0
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
