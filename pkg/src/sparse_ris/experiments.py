"""Config-driven numerical studies with reproducible CSV artifacts.

A study is described by one nested JSON document with sections ``system``
(carrier, Rician factor in dB, scattered-path counts, noise), ``bs`` (array
size, spacing in wavelengths, position), ``surface`` (tile grid, pitches,
per-tile element grid, element spacing in wavelengths, visibility half-angle
in degrees), ``ms`` (either a fixed ``point`` or a ``box`` of positions) and
``run`` (sweep variable and values, trial/position counts, master seed,
phase design). Partial documents are merged over the built-in defaults,
which encode the reference street-canyon scenario: 28 GHz, a 4x4 BS at
(100, -100, 10), the surface centered at (0, 0, 5) with 3 vertical tiles at
1 m pitch, lambda/6 elements and a 90 degree visible sector, users in
x [3, 5], y [-9, 9], z [-2, 2].

Every sweep row reports both the Monte Carlo ergodic spectral efficiency and
its closed-form approximation. Rows, positions and trials all derive their
randomness from counter-based streams of the master seed, so output files
are byte-identical across reruns and worker counts.

Transmit SNR is configured in dB; internally it sets the noise power to
10^(-snr_db/10) with unit transmit power, overriding ``system.noise_power``
whenever ``run.transmit_snr_db`` is present.
"""

from __future__ import annotations

import copy
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import SPEED_OF_LIGHT, NlosPolicy, SystemConfig
from .closed_form import approx_se, mean_signal_power
from .geometry import PlanarArraySpec, Position3, TileLayout
from .simulation import PositionBox, position_estimates

SWEEP_VARIABLES = ("transmit_snr_db", "rician_k_db", "tile_pitch_h",
                   "tiles_h", "tile_elements")

CSV_HEADER = "sweep_value,mc_se_bps_hz,mc_stderr,approx_se_bps_hz,rx_snr_db,n_trials,n_positions"


def default_document() -> dict:
    """Built-in defaults for the reference scenario, as a fresh document."""
    return {
        "system": {
            "carrier_frequency_hz": 28.0e9,
            "rician_k_db": 13.0,
            "nlos_paths_bs": 3,
            "nlos_paths_ms": 3,
            "noise_power": 1.0,
            "los_only": False,
            "nlos_policy": "match_los_gated",
        },
        "bs": {
            "n_v": 4,
            "n_h": 4,
            "spacing_wavelengths": 0.5,
            "position": [100.0, -100.0, 10.0],
        },
        "surface": {
            "center": [0.0, 0.0, 5.0],
            "tiles_v": 3,
            "tiles_h": 3,
            "pitch_v": 1.0,
            "pitch_h": 3.0,
            "tile_n_v": 3,
            "tile_n_h": 3,
            "element_spacing_wavelengths": 1.0 / 6.0,
            "vr_half_angle_deg": 45.0,
        },
        "ms": {"point": [4.0, 0.0, 0.0]},
        "run": {
            "sweep": {"variable": "transmit_snr_db",
                      "values": [40.0, 45.0, 50.0, 55.0, 60.0, 65.0]},
            "transmit_snr_db": 45.0,
            "n_trials": 10000,
            "n_positions": 400,
            "master_seed": 1,
            "phase_design": "optimal",
        },
    }


#: sections that are a one-of choice and replace wholesale instead of merging
_REPLACE_SECTIONS = ("ms",)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if (isinstance(v, dict) and isinstance(out.get(k), dict)
                and k not in _REPLACE_SECTIONS):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


class ConfigError(ValueError):
    """Raised for invalid documents; carries the full aggregated error list."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# ---------------------------------------------------------------------------
# validation

def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v)


def _check_num(doc, path, errors, minimum=None, exclusive=False, integer=False,
               maximum=None):
    sect, key = path.split(".")
    v = doc[sect].get(key)
    if not _is_num(v):
        errors.append(f"{path}: must be a finite number")
        return None
    if integer and int(v) != v:
        errors.append(f"{path}: must be an integer")
        return None
    if minimum is not None and (v <= minimum if exclusive else v < minimum):
        op = ">" if exclusive else ">="
        errors.append(f"{path}: must be {op} {minimum}")
        return None
    if maximum is not None and v > maximum:
        errors.append(f"{path}: must be <= {maximum}")
        return None
    return v


def _check_triple(doc, path, errors):
    sect, key = path.split(".")
    v = doc[sect].get(key)
    if not (isinstance(v, list) and len(v) == 3 and all(_is_num(c) for c in v)):
        errors.append(f"{path}: must be a list of three finite numbers")
        return None
    return v


def _unknown_keys(doc: dict) -> list:
    """Flag keys absent from the default schema; catches config typos early."""
    ref = default_document()
    ref["ms"] = {"point": None, "box": None}
    errors = []
    for sect, body in doc.items():
        if sect not in ref:
            errors.append(f"{sect}: unrecognized section")
            continue
        if not isinstance(body, dict):
            errors.append(f"{sect}: must be an object")
            continue
        for key in body:
            if key not in ref[sect]:
                errors.append(f"{sect}.{key}: unrecognized key")
    return errors


def validate_document(doc: dict) -> list:
    """All semantic violations of a fully merged document, as 'path: message'."""
    errors = []
    for sect in ("system", "bs", "surface", "ms", "run"):
        if not isinstance(doc.get(sect), dict):
            errors.append(f"{sect}: missing section")
    if errors:
        return errors

    _check_num(doc, "system.carrier_frequency_hz", errors, minimum=0, exclusive=True)
    _check_num(doc, "system.rician_k_db", errors)
    _check_num(doc, "system.nlos_paths_bs", errors, minimum=1, integer=True)
    _check_num(doc, "system.nlos_paths_ms", errors, minimum=1, integer=True)
    _check_num(doc, "system.noise_power", errors, minimum=0, exclusive=True)
    if not isinstance(doc["system"].get("los_only"), bool):
        errors.append("system.los_only: must be a boolean")
    if doc["system"].get("nlos_policy") not in (p.value for p in NlosPolicy):
        errors.append("system.nlos_policy: must be one of "
                      + ", ".join(p.value for p in NlosPolicy))

    _check_num(doc, "bs.n_v", errors, minimum=1, integer=True)
    _check_num(doc, "bs.n_h", errors, minimum=1, integer=True)
    _check_num(doc, "bs.spacing_wavelengths", errors, minimum=0, exclusive=True)
    _check_triple(doc, "bs.position", errors)

    center = _check_triple(doc, "surface.center", errors)
    _check_num(doc, "surface.tiles_v", errors, minimum=1, integer=True)
    _check_num(doc, "surface.tiles_h", errors, minimum=1, integer=True)
    _check_num(doc, "surface.pitch_v", errors, minimum=0)
    _check_num(doc, "surface.pitch_h", errors, minimum=0)
    _check_num(doc, "surface.tile_n_v", errors, minimum=1, integer=True)
    _check_num(doc, "surface.tile_n_h", errors, minimum=1, integer=True)
    _check_num(doc, "surface.element_spacing_wavelengths", errors,
               minimum=0, exclusive=True)
    _check_num(doc, "surface.vr_half_angle_deg", errors,
               minimum=0, exclusive=True, maximum=180)

    ms = doc["ms"]
    has_point = "point" in ms and ms["point"] is not None
    has_box = "box" in ms and ms["box"] is not None
    if has_point == has_box:
        errors.append("ms: exactly one of 'point' or 'box' is required")
    elif has_point:
        pt = _check_triple(doc, "ms.point", errors)
        if pt is not None and center is not None and pt[0] == center[0]:
            errors.append("ms.point: lies in the surface plane")
    else:
        box = ms["box"]
        if not isinstance(box, dict):
            errors.append("ms.box: must be an object with x, y, z ranges")
        else:
            ok = True
            for ax in ("x", "y", "z"):
                rng = box.get(ax)
                if not (isinstance(rng, list) and len(rng) == 2
                        and all(_is_num(c) for c in rng) and rng[0] <= rng[1]):
                    errors.append(f"ms.box.{ax}: must be [low, high] with low <= high")
                    ok = False
            if ok and center is not None and box["x"][0] <= center[0] <= box["x"][1]:
                errors.append("ms.box.x: range intersects the surface plane")

    run = doc["run"]
    sweep = run.get("sweep")
    if not isinstance(sweep, dict):
        errors.append("run.sweep: missing")
    else:
        var = sweep.get("variable")
        if var not in SWEEP_VARIABLES:
            errors.append("run.sweep.variable: must be one of "
                          + ", ".join(SWEEP_VARIABLES))
        values = sweep.get("values")
        if not (isinstance(values, list) and values
                and all(_is_num(v) for v in values)):
            errors.append("run.sweep.values: must be a non-empty list of finite numbers")
        elif var in ("tiles_h", "tile_elements"):
            if not all(int(v) == v and v >= 1 for v in values):
                errors.append(f"run.sweep.values: {var} values must be integers >= 1")
        elif var == "tile_pitch_h":
            if not all(v >= 0 for v in values):
                errors.append("run.sweep.values: pitches must be >= 0")
    if run.get("transmit_snr_db") is not None:
        _check_num(doc, "run.transmit_snr_db", errors)
    _check_num(doc, "run.n_trials", errors, minimum=1, integer=True)
    _check_num(doc, "run.n_positions", errors, minimum=1, integer=True)
    _check_num(doc, "run.master_seed", errors, minimum=0, integer=True)
    if run.get("phase_design") not in ("optimal", "random"):
        errors.append("run.phase_design: must be 'optimal' or 'random'")
    return errors


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated, fully merged study document."""

    document: dict

    @classmethod
    def from_document(cls, doc: dict) -> "ExperimentConfig":
        merged = _merge(default_document(), doc)
        errors = _unknown_keys(doc) + validate_document(merged)
        if errors:
            raise ConfigError(errors)
        return cls(merged)

    @property
    def sweep_variable(self) -> str:
        return self.document["run"]["sweep"]["variable"]

    @property
    def sweep_values(self) -> list:
        return list(self.document["run"]["sweep"]["values"])

    @property
    def master_seed(self) -> int:
        return int(self.document["run"]["master_seed"])


def validate_config(text: str):
    """Parse and validate raw JSON; returns (ExperimentConfig, []) or (None, errors)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        return None, [f"json: {e}"]
    if not isinstance(doc, dict):
        return None, ["json: top level must be an object"]
    try:
        return ExperimentConfig.from_document(doc), []
    except ConfigError as e:
        return None, e.errors


def config_hash(doc: dict) -> str:
    """sha256 of the canonical JSON serialization."""
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------------------
# document -> scene objects

def apply_sweep_value(doc: dict, variable: str, value) -> dict:
    """Copy of ``doc`` with one sweep value substituted."""
    if variable not in SWEEP_VARIABLES:
        raise ConfigError([f"run.sweep.variable: unknown variable '{variable}'"])
    out = copy.deepcopy(doc)
    if variable == "transmit_snr_db":
        out["run"]["transmit_snr_db"] = float(value)
    elif variable == "rician_k_db":
        out["system"]["rician_k_db"] = float(value)
    elif variable == "tile_pitch_h":
        out["surface"]["pitch_h"] = float(value)
    elif variable == "tiles_h":
        out["surface"]["tiles_h"] = int(round(value))
    else:
        n = int(round(value))
        out["surface"]["tile_n_v"] = n
        out["surface"]["tile_n_h"] = n
    return out


def build_scene(doc: dict):
    """(SystemConfig, TileLayout, bs PlanarArraySpec, bs Position3, point-or-box)."""
    s = doc["system"]
    wavelength = SPEED_OF_LIGHT / s["carrier_frequency_hz"]
    k_lin = 10.0 ** (s["rician_k_db"] / 10.0)
    tsnr = doc["run"].get("transmit_snr_db")
    noise = 10.0 ** (-tsnr / 10.0) if tsnr is not None else s["noise_power"]
    system = SystemConfig(
        carrier_frequency_hz=s["carrier_frequency_hz"],
        rician_k_bs=k_lin, rician_k_ms=k_lin,
        nlos_paths_bs=int(s["nlos_paths_bs"]), nlos_paths_ms=int(s["nlos_paths_ms"]),
        noise_power=noise, nlos_policy=NlosPolicy(s["nlos_policy"]),
        los_only=s["los_only"])
    f = doc["surface"]
    esp = f["element_spacing_wavelengths"] * wavelength
    tile = PlanarArraySpec(int(f["tile_n_v"]), int(f["tile_n_h"]), esp, esp)
    layout = TileLayout(int(f["tiles_v"]), int(f["tiles_h"]),
                        f["pitch_v"], f["pitch_h"], tile,
                        Position3(*map(float, f["center"])),
                        vr_half_angle=np.deg2rad(f["vr_half_angle_deg"]))
    b = doc["bs"]
    bsp = b["spacing_wavelengths"] * wavelength
    bs_array = PlanarArraySpec(int(b["n_v"]), int(b["n_h"]), bsp, bsp)
    bs_pos = Position3(*map(float, b["position"]))
    ms = doc["ms"]
    if ms.get("point") is not None:
        target = Position3(*map(float, ms["point"]))
    else:
        box = ms["box"]
        target = PositionBox(tuple(map(float, box["x"])), tuple(map(float, box["y"])),
                             tuple(map(float, box["z"])))
    return system, layout, bs_array, bs_pos, target


# ---------------------------------------------------------------------------
# sweep execution

@dataclass(frozen=True)
class SweepRow:
    """One sweep point: Monte Carlo and closed-form results side by side."""

    sweep_value: float
    mc_se: float
    mc_stderr: float
    approx_se: float
    rx_snr_db: float
    n_trials: int
    n_positions: int


@dataclass
class ExperimentResult:
    """Ordered sweep rows plus metadata sufficient to reproduce them."""

    rows: list
    metadata: dict


def evaluate_row(doc: dict, value) -> SweepRow:
    """Evaluate one sweep point of the (merged) document, deterministically."""
    rowdoc = apply_sweep_value(doc, doc["run"]["sweep"]["variable"], value)
    system, layout, bs_array, bs_pos, target = build_scene(rowdoc)
    run = rowdoc["run"]
    seed = int(run["master_seed"])
    n_trials = int(run["n_trials"])
    if isinstance(target, Position3):
        region = PositionBox.at_point(target)
        n_positions = 1
    else:
        region = target
        n_positions = int(run["n_positions"])
    means, errs, snrs, approxs = [], [], [], []
    for est, los, phases in position_estimates(
            system, layout, bs_array, bs_pos, region, n_positions, n_trials,
            seed, run["phase_design"]):
        means.append(est.mean_se)
        errs.append(est.std_error)
        snrs.append(est.mean_snr)
        power = mean_signal_power(system, los, phases)
        approxs.append(approx_se(power.total, system.noise_power))
    means = np.array(means)
    if n_positions > 1:
        stderr = float(means.std(ddof=1) / np.sqrt(n_positions))
    else:
        stderr = errs[0]
    mean_snr = float(np.mean(snrs))
    rx_db = 10.0 * np.log10(mean_snr) if mean_snr > 0.0 else float("-inf")
    return SweepRow(float(value), float(means.mean()), stderr,
                    float(np.mean(approxs)), float(rx_db), n_trials, n_positions)


def _row_task(args) -> SweepRow:
    # module-level so worker processes can unpickle it
    doc_json, value = args
    return evaluate_row(json.loads(doc_json), value)


def run_sweep(config: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Evaluate every sweep value; identical output for any worker count."""
    doc = config.document
    values = config.sweep_values
    start = time.perf_counter()
    if workers is not None and workers > 1:
        tasks = [(json.dumps(doc), v) for v in values]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row_task, tasks))
    else:
        rows = [evaluate_row(doc, v) for v in values]
    from . import __version__
    metadata = {
        "config_sha256": config_hash(doc),
        "master_seed": config.master_seed,
        "sweep_variable": config.sweep_variable,
        "version": __version__,
        "wall_clock_s": round(time.perf_counter() - start, 3),
        "config": doc,
    }
    return ExperimentResult(rows, metadata)


# ---------------------------------------------------------------------------
# artifacts

def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def write_csv(result: ExperimentResult, path) -> list:
    """CSV rows plus a JSON metadata sidecar; returns the written paths.

    The CSV bytes depend only on (config, master seed); the sidecar carries
    wall-clock timing and is excluded from that guarantee.
    """
    path = Path(path)
    with open(path, "w", newline="") as f:
        f.write(CSV_HEADER + "\n")
        for r in result.rows:
            f.write(",".join([_fmt(r.sweep_value), _fmt(r.mc_se), _fmt(r.mc_stderr),
                              _fmt(r.approx_se), _fmt(r.rx_snr_db),
                              str(r.n_trials), str(r.n_positions)]) + "\n")
    sidecar = path.with_suffix(".meta.json")
    with open(sidecar, "w") as f:
        json.dump(result.metadata, f, indent=2, sort_keys=True)
        f.write("\n")
    return [path, sidecar]


def write_json(result: ExperimentResult, path) -> list:
    """Single JSON file with metadata and rows."""
    path = Path(path)
    body = {"metadata": result.metadata,
            "rows": [r.__dict__ for r in result.rows]}
    with open(path, "w") as f:
        json.dump(body, f, indent=2, sort_keys=True)
        f.write("\n")
    return [path]


def write_result(result: ExperimentResult, out_dir, name: str,
                 fmt: str = "csv") -> list:
    """Write one result under ``out_dir`` as ``name``.csv/.json; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        return write_csv(result, out_dir / f"{name}.csv")
    if fmt == "json":
        return write_json(result, out_dir / f"{name}.json")
    raise ConfigError([f"format: unknown format '{fmt}'"])


# ---------------------------------------------------------------------------
# bundled studies

def fig2_document(base: dict | None = None) -> dict:
    """Approximation-tightness study: SE vs transmit SNR, optimal vs random phases."""
    doc = copy.deepcopy(base) if base is not None else default_document()
    doc["surface"]["tiles_h"] = 8
    doc["surface"]["pitch_h"] = 3.0
    doc["surface"]["tile_n_v"] = 3
    doc["surface"]["tile_n_h"] = 3
    doc["ms"] = {"point": [4.0, 0.0, 0.0]}
    doc["run"]["sweep"] = {"variable": "transmit_snr_db",
                           "values": [40.0, 45.0, 50.0, 55.0, 60.0, 65.0]}
    return doc


def fig3_document(base: dict | None = None) -> dict:
    """Scaling study: received SNR vs per-tile element grid side 2..7."""
    doc = copy.deepcopy(base) if base is not None else default_document()
    doc["surface"]["tiles_h"] = 8
    doc["surface"]["pitch_h"] = 3.0
    doc["ms"] = {"point": [4.0, 0.0, 0.0]}
    doc["run"]["sweep"] = {"variable": "tile_elements",
                           "values": [2, 3, 4, 5, 6, 7]}
    return doc


def fig4_document(base: dict | None = None) -> dict:
    """Spacing study: position-averaged SE vs horizontal tile pitch."""
    doc = copy.deepcopy(base) if base is not None else default_document()
    doc["surface"]["tile_n_v"] = 3
    doc["surface"]["tile_n_h"] = 3
    doc["ms"] = {"box": {"x": [3.0, 5.0], "y": [-9.0, 9.0], "z": [-2.0, 2.0]}}
    doc["run"]["sweep"] = {"variable": "tile_pitch_h",
                           "values": [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0,
                                      3.5, 4.0, 4.5, 5.0, 5.5, 6.0]}
    if base is None:
        # position averaging dominates the error; fewer trials suffice
        doc["run"]["n_trials"] = 2000
    return doc


def run_fig2(config: ExperimentConfig | None = None,
             workers: int | None = None) -> dict:
    """Two results keyed 'fig2_optimal' and 'fig2_random'."""
    base = fig2_document(config.document if config else None)
    out = {}
    for name, design in (("fig2_optimal", "optimal"), ("fig2_random", "random")):
        doc = copy.deepcopy(base)
        doc["run"]["phase_design"] = design
        out[name] = run_sweep(ExperimentConfig.from_document(doc), workers)
    return out


def run_fig3(config: ExperimentConfig | None = None,
             workers: int | None = None) -> dict:
    """Two results keyed 'fig3_k13db' and 'fig3_km40db'."""
    base = fig3_document(config.document if config else None)
    out = {}
    for name, k_db in (("fig3_k13db", 13.0), ("fig3_km40db", -40.0)):
        doc = copy.deepcopy(base)
        doc["system"]["rician_k_db"] = k_db
        out[name] = run_sweep(ExperimentConfig.from_document(doc), workers)
    return out


def run_fig4(config: ExperimentConfig | None = None,
             workers: int | None = None) -> dict:
    """Five results keyed 'fig4_mh3' .. 'fig4_mh7', one per horizontal tile count."""
    base = fig4_document(config.document if config else None)
    out = {}
    for tiles_h in (3, 4, 5, 6, 7):
        doc = copy.deepcopy(base)
        doc["surface"]["tiles_h"] = tiles_h
        out[f"fig4_mh{tiles_h}"] = run_sweep(ExperimentConfig.from_document(doc), workers)
    return out
