"""Command-line entry point: ``moentangle <subcommand> [flags]``.

Configuration is a JSON file with the flat device keys (``g_em_hz`` ...) at top
level plus optional ``grid``, ``detector`` and ``run`` sections. ``--set``
takes ``key=value`` for device keys or ``section.key=value`` for the rest.
Lists are written ``a,b,c`` and linear ranges ``start:stop:num``.

Exit codes: 0 success, 2 configuration error, 3 numerical or stability error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .counting import (
    ResolutionError,
    UndefinedG2Error,
    correlation_trace,
    default_tau_grid,
    g2_binned,
    verification_criterion,
)
from .detection import (
    DetectorModel,
    MeasurementSetting,
    NoSignalError,
    UnphysicalCovarianceError,
    chsh_fringe,
    detection_regime_map,
)
from .entanglement import (
    StabilityError,
    UnphysicalInputError,
    ef_grid,
    entanglement_rate_scan,
    log_negativity_arrays,
    regime_map,
)
from .params import (
    TWO_PI,
    ConfigError,
    build_dynamics,
    derive_couplings,
    exceptional_point_g_em,
    hybrid_eigenvalues,
    is_stable,
    mode_splitting,
    params_from_mapping,
    params_to_mapping,
    table1,
)
from .spectra import (
    FrequencyGrid,
    NotStandardFormError,
    NumericalSingularityError,
    covariance_grid,
    spectrum_table,
    standard_form_arrays,
)
from .tables import write_csv, write_json

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

CONVENTIONS = (
    "rates in rad/s internally, *_hz keys are ordinary frequencies; vacuum quadrature variance 1; "
    "optical output read at -omega, microwave at +omega; fringe variable phi_e - phi_o"
)

NUMERICAL_ERRORS = (
    StabilityError,
    NumericalSingularityError,
    NotStandardFormError,
    UnphysicalInputError,
    UnphysicalCovarianceError,
    NoSignalError,
    UndefinedG2Error,
    ResolutionError,
    ArithmeticError,
    np.linalg.LinAlgError,
)

RUN_DEFAULTS: dict[str, Any] = {
    "R_values": None,
    "C_values": "0.25:20:40",
    "R_grid": "0.05:2:40",
    "er_R_values": "0.05:4:80",
    "omega_hz": None,
    "phi_o": 0.0,
    "phi_e_points": 361,
    "n_phases": 181,
    "eigen_points": 201,
    "eigen_max_factor": 4.0,
    "tau_half_span_us": 4.0,
    "tau_step_ns": None,
    "check_convergence": True,
}

TABLE_COMMANDS = {"spectrum", "eigen", "ef", "ef-map", "er-scan", "chsh-fringe", "regime-map", "g2"}
REPORT_COMMANDS = {"criterion", "validate"}


@dataclass
class RunConfig:
    params: dict[str, Any]
    grid: dict[str, Any] = field(default_factory=dict)
    detector: dict[str, Any] = field(default_factory=dict)
    run: dict[str, Any] = field(default_factory=lambda: dict(RUN_DEFAULTS))

    def system_params(self):
        try:
            return params_from_mapping(self.params)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def frequency_grid(self) -> FrequencyGrid:
        unknown = set(self.grid) - {f.name for f in fields(FrequencyGrid)}
        if unknown:
            raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
        g = FrequencyGrid(**self.grid)
        if g.points < 3 or g.span_factor <= 0:
            raise ConfigError("grid needs points >= 3 and span_factor > 0")
        return g

    def detector_model(self) -> DetectorModel:
        values = dict(DetectorModel.table2().__dict__)
        values.update({k: v for k, v in self.detector.items() if k != "tau_b_us"})
        if "tau_b_us" in self.detector:
            values["tau_b"] = float(self.detector["tau_b_us"]) * 1e-6
        unknown = set(values) - {f.name for f in fields(DetectorModel)}
        if unknown:
            raise ConfigError(f"unknown detector keys: {sorted(unknown)}")
        try:
            return DetectorModel(**values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def default_params() -> dict[str, Any]:
    """Device defaults: C_om = 1, R = 0.2, n_ba = 1 on the reference device."""
    mapping = params_to_mapping(table1(1.0, 0.2, 1.0))
    mapping.pop("kappa_e_c_hz")
    mapping["ratio_R"] = 0.2
    return mapping


def parse_value(text: str) -> Any:
    """JSON scalar, ``a,b,c`` list or ``start:stop:num`` range (kept as text)."""
    text = text.strip()
    if ":" in text or "," in text:
        return text
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def as_array(value: Any, name: str) -> np.ndarray:
    """Resolve a list/range config value to a float array."""
    try:
        if isinstance(value, str):
            if ":" in value:
                start, stop, num = value.split(":")
                n = int(num)
                if n < 1:
                    raise ValueError
                return np.linspace(float(start), float(stop), n)
            return np.array([float(x) for x in value.split(",") if x.strip()])
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return np.array([float(value)])
        if isinstance(value, list):
            return np.array([float(x) for x in value])
    except (TypeError, ValueError):
        pass
    raise ConfigError(f"{name} must be a number, a list, 'a,b,c' or 'start:stop:num'; got {value!r}")


def _set_param(params: dict, key: str, value: Any) -> None:
    # keep exactly one representation of each either/or pair
    exclusive = {"ratio_R": "kappa_e_c_hz", "kappa_e_c_hz": "ratio_R", "C_om": "g_om_hz", "g_om_hz": "C_om"}
    if key in exclusive:
        params.pop(exclusive[key], None)
    params[key] = value


def build_config(path: str | None, overrides: list[str]) -> RunConfig:
    cfg = RunConfig(params=default_params())
    if path:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        for key, value in data.items():
            if key in ("grid", "detector", "run"):
                if not isinstance(value, dict):
                    raise ConfigError(f"section {key!r} must be an object")
                getattr(cfg, key).update(value)
            else:
                _set_param(cfg.params, key, value)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, text = item.split("=", 1)
        key = key.strip()
        value = parse_value(text)
        if "." in key:
            section, sub = key.split(".", 1)
            if section == "params":
                _set_param(cfg.params, sub, value)
            elif section in ("grid", "detector", "run"):
                getattr(cfg, section)[sub] = value
            else:
                raise ConfigError(f"unknown config section {section!r}")
        else:
            _set_param(cfg.params, key, value)
    unknown = set(cfg.run) - set(RUN_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown run keys: {sorted(unknown)}")
    return cfg


def base_meta(cfg: RunConfig, command: str) -> dict[str, Any]:
    p = cfg.system_params()
    return {
        "tool": "moentangle",
        "version": __version__,
        "command": command,
        "params": params_to_mapping(p),
        "derived": {"C_em": p.C_em, "ratio_R": p.ratio_R, "g_om_hz": derive_couplings(p).g_om / TWO_PI},
        "grid": {"span_factor": cfg.frequency_grid().span_factor, "points": cfg.frequency_grid().points},
        "conventions": CONVENTIONS,
    }


# ---------------------------------------------------------------------------
# subcommands: each returns a list of (suffix, columns, meta) tables or a report


def cmd_spectrum(cfg: RunConfig, threads: int):
    base = cfg.system_params()
    grid = cfg.frequency_grid()
    R_values = cfg.run.get("R_values")
    variants = [(None, base)] if R_values is None else [(R, base.with_ratio(float(R))) for R in as_array(R_values, "run.R_values")]
    tables = []
    for R, p in variants:
        sys_ = build_dynamics(derive_couplings(p))
        if not is_stable(sys_):
            raise StabilityError(f"unstable configuration (ratio_R={p.ratio_R:g})")
        cols = spectrum_table(sys_, grid.omegas(p.g_em))
        meta = base_meta(cfg, "spectrum")
        meta["params"] = params_to_mapping(p)
        meta["derived"]["ratio_R"] = p.ratio_R
        tables.append(("" if R is None else f"_R{R:g}", cols, meta))
    return tables


def cmd_eigen(cfg: RunConfig, threads: int):
    p = derive_couplings(cfg.system_params())
    g_ep = exceptional_point_g_em(p)
    n = int(cfg.run["eigen_points"])
    # g_em = 0 is not a valid device, so the sweep starts one step above it
    g_values = np.linspace(0.0, float(cfg.run["eigen_max_factor"]) * max(g_ep, p.g_em / 10), n + 1)[1:]
    rows = {k: np.empty(n) for k in ("g_em_hz", "re_lambda_B", "im_lambda_B", "re_lambda_C", "im_lambda_C", "splitting_hz", "max_re_M")}
    for i, g in enumerate(g_values):
        q = p.with_(g_em=float(g), C_om=p.C_om)
        lb, lc = hybrid_eigenvalues(q)
        rows["g_em_hz"][i] = g / TWO_PI
        rows["re_lambda_B"][i], rows["im_lambda_B"][i] = lb.real, lb.imag
        rows["re_lambda_C"][i], rows["im_lambda_C"][i] = lc.real, lc.imag
        rows["splitting_hz"][i] = mode_splitting(q) / TWO_PI
        rows["max_re_M"][i] = float(np.max(build_dynamics(q).eigenvalues().real))
    lb, lc = hybrid_eigenvalues(p)
    sys_ = build_dynamics(p)
    meta = base_meta(cfg, "eigen")
    meta["report"] = {
        "lambda_B": complex(lb),
        "lambda_C": complex(lc),
        "splitting_hz": mode_splitting(p) / TWO_PI,
        "exceptional_point_g_em_hz": g_ep / TWO_PI,
        "above_exceptional_point": bool(p.g_em > g_ep),
        "eigenvalues_M": [complex(z) for z in sys_.eigenvalues()],
        "stable": is_stable(sys_),
    }
    return [("", rows, meta)]


def cmd_ef(cfg: RunConfig, threads: int):
    p = derive_couplings(cfg.system_params())
    sys_ = build_dynamics(p)
    if not is_stable(sys_):
        raise StabilityError("E_F spectrum requires a stable configuration")
    omegas = cfg.frequency_grid().omegas(p.g_em)
    r0, ef = ef_grid(sys_, omegas)
    u, v, w = standard_form_arrays(covariance_grid(sys_, omegas))
    cols = {"omega_hz": omegas / TWO_PI, "r0": r0, "ef_ebits": ef, "log_negativity": log_negativity_arrays(u, v, w)}
    return [("", cols, base_meta(cfg, "ef"))]


def _omega(cfg: RunConfig, p) -> float:
    value = cfg.run.get("omega_hz")
    return p.g_em if value is None else TWO_PI * float(value)


def cmd_ef_map(cfg: RunConfig, threads: int):
    p = cfg.system_params()
    C = as_array(cfg.run["C_values"], "run.C_values")
    R = as_array(cfg.run["R_grid"], "run.R_grid")
    omega = _omega(cfg, p)
    m = regime_map(p, C, R, omega=omega, threads=threads)
    cc, rr = np.meshgrid(C, R, indexing="ij")
    cols = {"c_om": cc.ravel(), "ratio_R": rr.ravel(), "ef_ebits": m.ef.ravel(), "stable": m.stable.ravel()}
    meta = base_meta(cfg, "ef-map")
    meta["omega_hz"] = omega / TWO_PI
    return [("", cols, meta)]


def cmd_er_scan(cfg: RunConfig, threads: int):
    p = cfg.system_params()
    R = as_array(cfg.run["er_R_values"], "run.er_R_values")
    scan = entanglement_rate_scan(p, R, cfg.frequency_grid(), bool(cfg.run["check_convergence"]), threads)
    cols = {"ratio_R": scan.ratio_R, "er_ebits_per_s": scan.er, "converged": scan.converged}
    return [("", cols, base_meta(cfg, "er-scan"))]


def cmd_chsh_fringe(cfg: RunConfig, threads: int):
    p = derive_couplings(cfg.system_params())
    det = cfg.detector_model()
    phi_e = np.linspace(0.0, 2 * math.pi, int(cfg.run["phi_e_points"]))
    fr = chsh_fringe(build_dynamics(p), det, float(cfg.run["phi_o"]), phi_e, MeasurementSetting())
    cols = {"phi_e_rad": fr.phi_e, "S": fr.S, "E_00": fr.E_00, "E_01": fr.E_01, "E_10": fr.E_10, "E_11": fr.E_11}
    meta = base_meta(cfg, "chsh-fringe")
    meta["detector"] = det.__dict__
    meta["phi_o"] = float(cfg.run["phi_o"])
    return [("", cols, meta)]


def cmd_regime_map(cfg: RunConfig, threads: int):
    p = cfg.system_params()
    det = cfg.detector_model()
    C = as_array(cfg.run["C_values"], "run.C_values")
    R = as_array(cfg.run["R_grid"], "run.R_grid")
    m = detection_regime_map(p, C, R, det, MeasurementSetting(), int(cfg.run["n_phases"]), threads)
    cc, rr = np.meshgrid(C, R, indexing="ij")
    cols = {
        "c_om": cc.ravel(),
        "ratio_R": rr.ravel(),
        "s_max": m.s_max.ravel(),
        "f_lb": m.f_lb.ravel(),
        "chsh_violation": m.chsh_violation.ravel(),
        "fidelity_pass": m.fidelity_pass.ravel(),
    }
    meta = base_meta(cfg, "regime-map")
    meta["detector"] = det.__dict__
    return [("", cols, meta)]


def _trace(cfg: RunConfig):
    p = derive_couplings(cfg.system_params())
    det = cfg.detector_model()
    step_ns = cfg.run.get("tau_step_ns")
    half = float(cfg.run["tau_half_span_us"]) * 1e-6
    if step_ns is None:
        taus = default_tau_grid(det.tau_b, half)
    else:
        step = float(step_ns) * 1e-9
        n = int(round(half / step))
        taus = np.arange(-n, n + 1) * step
    trace = correlation_trace(build_dynamics(p), taus, cfg.frequency_grid())
    return trace, det


def cmd_g2(cfg: RunConfig, threads: int):
    trace, det = _trace(cfg)
    binned = g2_binned(trace, det.tau_b)
    report = verification_criterion(trace, det, binned)
    idx = binned.index_of(trace.tau)
    g2b = binned.at(trace.tau)
    cols = {
        "tau_us": trace.tau * 1e6,
        "g2": trace.g2,
        "g2_binned": g2b,
        "window_index": idx,
        "passes_criterion": np.where(idx >= 0, g2b > report.threshold, False),
    }
    meta = base_meta(cfg, "g2")
    meta["detector"] = det.__dict__
    meta["report"] = report.as_dict()
    return [("", cols, meta)]


def cmd_criterion(cfg: RunConfig, threads: int):
    trace, det = _trace(cfg)
    report = verification_criterion(trace, det)
    meta = base_meta(cfg, "criterion")
    meta["detector"] = det.__dict__
    return {"meta": meta, "report": report.as_dict()}


def cmd_validate(cfg: RunConfig, threads: int):
    from .validation import run_all

    checks = run_all()
    return {
        "meta": {"tool": "moentangle", "version": __version__, "command": "validate"},
        "report": {c.name: {"passed": c.passed, "detail": c.detail} for c in checks},
        "passed": all(c.passed for c in checks),
    }


COMMANDS = {
    "spectrum": cmd_spectrum,
    "eigen": cmd_eigen,
    "ef": cmd_ef,
    "ef-map": cmd_ef_map,
    "er-scan": cmd_er_scan,
    "chsh-fringe": cmd_chsh_fringe,
    "regime-map": cmd_regime_map,
    "g2": cmd_g2,
    "criterion": cmd_criterion,
    "validate": cmd_validate,
}


# ---------------------------------------------------------------------------


def _open(path: str | None, suffix: str = ""):
    if path is None:
        return contextlib.nullcontext(sys.stdout)
    p = Path(path)
    if suffix:
        p = p.with_name(p.stem + suffix + p.suffix)
    p.parent.mkdir(parents=True, exist_ok=True)
    return open(p, "w", newline="\n")


def emit(result, fmt: str, out: str | None) -> None:
    if isinstance(result, dict):
        with _open(out) as fh:
            if fmt == "csv":
                write_csv(fh, {"key": list(result["report"]), "value": [str(v) for v in result["report"].values()]}, result["meta"])
            else:
                write_json(fh, result)
        return
    for suffix, cols, meta in result:
        with _open(out, suffix if len(result) > 1 else "") as fh:
            if fmt == "json":
                write_json(fh, {"meta": meta, "columns": cols})
            else:
                write_csv(fh, cols, meta)


def _csv_safe(result):
    # scalar reports in CSV need plain text values
    if isinstance(result, dict):
        from .tables import format_value

        result = dict(result)
        result["report"] = {
            k: (format_value(v) if isinstance(v, (int, float)) else json.dumps(v, sort_keys=True)) for k, v in result["report"].items()
        }
    return result


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="moentangle", description="Microwave-optical entanglement model")
    parser.add_argument("--version", action="version", version=f"moentangle {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    return parser


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse errors through the JSON error path
        raise _ArgError(message)


def _error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}, sort_keys=True) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    parser.__class__ = _Parser
    try:
        args = parser.parse_args(argv)
    except _ArgError as exc:
        return _error("usage", str(exc), EXIT_CONFIG)
    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    if threads < 1:
        return _error("config", "--threads must be >= 1", EXIT_CONFIG)
    fmt = args.format or ("json" if args.command in REPORT_COMMANDS else "csv")
    try:
        cfg = build_config(args.config, args.overrides)
        cfg.system_params()
        result = COMMANDS[args.command](cfg, threads)
        emit(_csv_safe(result) if fmt == "csv" else result, fmt, args.out)
    except ConfigError as exc:
        return _error("config", str(exc), EXIT_CONFIG)
    except NUMERICAL_ERRORS as exc:
        return _error("numerical", f"{type(exc).__name__}: {exc}", EXIT_NUMERICAL)
    except (TypeError, ValueError) as exc:
        return _error("config", f"{type(exc).__name__}: {exc}", EXIT_CONFIG)
    if args.command == "validate" and not result["passed"]:
        return EXIT_NUMERICAL
    return EXIT_OK


def _entry() -> int:
    try:
        return main()
    except BrokenPipeError:
        # reader closed early (e.g. piped into head); not an error of ours
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(_entry())
