"""File formats: single fields, coefficient bundles, solution directories.

Field file (JSON)::

    {"format": "singularpde-field", "version": 1, "d": 1, "N": 256, "L": 1.0,
     "dtype": "complex128", "byte_order": "little", "layout": "numpy-fft-c-order",
     "encoding": "base64" | "raw", "data": "<base64>" | "<sidecar .bin name>"}

The payload is the coefficient array in numpy FFT order (index 0 = zero
frequency, negative frequencies in the upper half), C order, each complex
number stored as two little-endian float64 values (real, imaginary).
Coefficients are normalised so that values = N^d * ifft(coeffs).

Directories are written to a temporary sibling and renamed into place. Only
``run_info.json`` carries timestamps, so everything else is reproducible
byte for byte.
"""
from __future__ import annotations

import base64
import csv
import hashlib
import io
import json
import os
import platform
import shutil
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import numpy as np

from .spectral import Grid, SpectralField

FIELD_FORMAT = "singularpde-field"
FORMAT_VERSION = 1
LAYOUT = "numpy-fft-c-order"
DTYPE = np.dtype("<c16")


class FormatError(ValueError):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class AtomicDirectory:
    """Context manager yielding a temporary directory that replaces ``target`` on success.

    An existing target is only replaced when it holds a ``manifest.json``
    (i.e. looks like an earlier output of this package).
    """

    def __init__(self, target: str | Path):
        self.target = Path(target)

    def __enter__(self) -> Path:
        self.target.parent.mkdir(parents=True, exist_ok=True)
        if self.target.exists() and not (self.target / "manifest.json").exists():
            if not self.target.is_dir() or any(self.target.iterdir()):
                raise FileExistsError(f"{self.target} exists and is not an output directory")
        self.tmp = Path(tempfile.mkdtemp(dir=self.target.parent, prefix=f".{self.target.name}."))
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            shutil.rmtree(self.tmp, ignore_errors=True)
            return False
        if self.target.exists():
            old = Path(tempfile.mkdtemp(dir=self.target.parent, prefix=f".{self.target.name}.old."))
            os.replace(self.target, old / "x")
            os.replace(self.tmp, self.target)
            shutil.rmtree(old, ignore_errors=True)
        else:
            os.replace(self.tmp, self.target)
        return False


# --- single fields ----------------------------------------------------------------


def field_header(grid: Grid) -> dict:
    return {"format": FIELD_FORMAT, "version": FORMAT_VERSION, "d": grid.d, "N": grid.N, "L": grid.L,
            "dtype": "complex128", "byte_order": "little", "layout": LAYOUT}


def field_to_json(f: SpectralField) -> str:
    head = field_header(f.grid)
    head["encoding"] = "base64"
    head["data"] = base64.b64encode(np.ascontiguousarray(f.coeffs, dtype=DTYPE).tobytes()).decode("ascii")
    return _dumps(head)


def _decode(head: dict, payload: bytes) -> SpectralField:
    for key, want in (("format", FIELD_FORMAT), ("dtype", "complex128"), ("byte_order", "little"),
                      ("layout", LAYOUT)):
        if head.get(key) != want:
            raise FormatError(f"unsupported field file: {key}={head.get(key)!r}, expected {want!r}")
    if head.get("version") != FORMAT_VERSION:
        raise FormatError(f"unsupported field format version {head.get('version')!r}")
    grid = Grid(int(head["d"]), int(head["N"]), float(head["L"]))
    arr = np.frombuffer(payload, dtype=DTYPE)
    if arr.size != grid.N**grid.d:
        raise FormatError(f"payload holds {arr.size} coefficients, expected {grid.N**grid.d}")
    return SpectralField(grid, arr.reshape(grid.shape).astype(np.complex128))


def field_from_json(text: str, base_dir: str | Path | None = None) -> SpectralField:
    try:
        head = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not a JSON field file: {exc}") from exc
    enc = head.get("encoding")
    if enc == "base64":
        payload = base64.b64decode(head["data"])
    elif enc == "raw":
        if base_dir is None:
            raise FormatError("raw-encoded field needs the directory holding its payload")
        payload = (Path(base_dir) / head["data"]).read_bytes()
    else:
        raise FormatError(f"unknown encoding {enc!r}")
    return _decode(head, payload)


def save_field(f: SpectralField, path: str | Path, encoding: str = "base64") -> None:
    path = Path(path)
    if encoding == "base64":
        atomic_write_text(path, field_to_json(f))
    elif encoding == "raw":
        bin_name = path.with_suffix(".bin").name
        atomic_write_bytes(path.with_name(bin_name), np.ascontiguousarray(f.coeffs, dtype=DTYPE).tobytes())
        head = field_header(f.grid)
        head.update(encoding="raw", data=bin_name)
        atomic_write_text(path, _dumps(head))
    else:
        raise ValueError(f"encoding must be 'base64' or 'raw', got {encoding!r}")


def load_field(path: str | Path) -> SpectralField:
    path = Path(path)
    return field_from_json(path.read_text(encoding="utf-8"), path.parent)


def field_to_csv(f: SpectralField) -> str:
    """Physical-space samples: columns x (, y), value."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    coords = [c.reshape(-1) for c in f.grid.coords]
    vals = f.values.reshape(-1)
    w.writerow(["x", "value"] if f.grid.d == 1 else ["x", "y", "value"])
    for row in zip(*coords, vals):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def rows_to_csv(rows: Iterable[dict], fieldnames: list[str] | None = None) -> str:
    rows = list(rows)
    if fieldnames is None:
        fieldnames = list(rows[0]) if rows else []
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return buf.getvalue()


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --- manifests -------------------------------------------------------------------


def package_version() -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("singularpde")
    except PackageNotFoundError:
        return "0+unknown"


def write_manifest(directory: Path, manifest: dict) -> None:
    files = sorted(p.name for p in directory.iterdir()
                   if p.is_file() and p.name not in ("manifest.json", "run_info.json"))
    manifest = dict(manifest)
    manifest["files"] = {name: sha256(directory / name) for name in files}
    manifest.setdefault("package_version", package_version())
    atomic_write_text(directory / "manifest.json", _dumps(manifest))


def write_run_info(directory: Path, extra: dict | None = None) -> None:
    info = {"written_at": datetime.now(timezone.utc).isoformat(), "python": platform.python_version(),
            "numpy": np.__version__, "host": platform.node()}
    info.update(extra or {})
    atomic_write_text(directory / "run_info.json", _dumps(info))


def read_manifest(directory: str | Path) -> dict:
    path = Path(directory) / "manifest.json"
    if not path.exists():
        raise FormatError(f"{directory} has no manifest.json")
    return json.loads(path.read_text(encoding="utf-8"))


def verify_manifest(directory: str | Path) -> list[str]:
    """Files whose checksum disagrees with the manifest (empty = intact)."""
    directory = Path(directory)
    man = read_manifest(directory)
    bad = []
    for name, digest in man.get("files", {}).items():
        p = directory / name
        if not p.exists() or sha256(p) != digest:
            bad.append(name)
    return bad


# --- bundles ---------------------------------------------------------------------


def save_bundle(directory: str | Path, b, config: dict) -> Path:
    """Write the slices of a RoughCoefficient plus a manifest."""
    directory = Path(directory)
    with AtomicDirectory(directory) as tmp:
        names = []
        for i, s in enumerate(b.slices):
            name = f"slice_{i:03d}.json"
            atomic_write_text(tmp / name, field_to_json(s))
            names.append(name)
        write_manifest(tmp, {"kind": "bundle", "config": config, "times": list(b.times), "T": b.T,
                             "beta": b.beta, "seed": b.seed, "generator_id": b.generator_id,
                             "slices": names, "meta": b.meta})
        write_run_info(tmp)
    return directory


def load_bundle(directory: str | Path):
    from .roughfield import RoughCoefficient

    directory = Path(directory)
    man = read_manifest(directory)
    if man.get("kind") != "bundle":
        raise FormatError(f"{directory} is not a coefficient bundle")
    slices = tuple(load_field(directory / name) for name in man["slices"])
    return RoughCoefficient(tuple(man["times"]), slices, float(man["T"]), float(man["beta"]),
                            man["seed"], man["generator_id"], dict(man.get("meta", {})))


# --- solutions --------------------------------------------------------------------


def save_solution(directory: str | Path, solution, manifest: dict, extra_csv: dict | None = None) -> Path:
    """Field files per time, diagnostics.csv, iterations.csv and a manifest."""
    directory = Path(directory)
    with AtomicDirectory(directory) as tmp:
        names = []
        for i in range(len(solution.time_grid)):
            name = f"u_{i:04d}.json"
            atomic_write_text(tmp / name, field_to_json(solution.at(i)))
            names.append(name)
        atomic_write_text(tmp / "diagnostics.csv",
                          rows_to_csv(solution.diagnostics_rows(), ["t", "norm", "residual", "contraction_factor"]))
        atomic_write_text(tmp / "iterations.csv",
                          rows_to_csv(solution.iteration_rows(), ["iteration", "residual", "contraction_factor"]))
        for name, text in (extra_csv or {}).items():
            atomic_write_text(tmp / name, text)
        man = dict(manifest)
        man.update(kind="solution", fields=names, times=[float(t) for t in solution.time_grid],
                   converged=solution.converged, iterations=solution.iterations,
                   warnings=list(solution.warnings))
        write_manifest(tmp, man)
        write_run_info(tmp)
    return directory


def load_solution_fields(directory: str | Path) -> tuple[np.ndarray, list[SpectralField]]:
    directory = Path(directory)
    man = read_manifest(directory)
    if man.get("kind") != "solution":
        raise FormatError(f"{directory} is not a solution directory")
    return np.array(man["times"]), [load_field(directory / n) for n in man["fields"]]
