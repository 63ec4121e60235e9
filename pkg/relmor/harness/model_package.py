#!/usr/bin/env python3
"""
Model Packages
Plain-text state-space models: a JSON manifest plus one matrix file per
matrix ("rows cols" header, then row-major whitespace-separated values),
and converters from MatrixMarket and MATLAB benchmark files
"""

import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator
from scipy import io as spio
from scipy import sparse

from relmor.errors import ModelDimensionError, ModelFormatError
from relmor.lti_model import StateSpaceModel

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
MATRIX_NAMES = ("A", "B", "C", "D")


class ModelManifest(BaseModel):
    """Package manifest; D may be omitted and then defaults to zero"""

    model_config = ConfigDict(frozen=True)

    name: str
    n: int
    m: int
    p: int
    files: Dict[str, str]
    description: Optional[str] = None

    @field_validator("n", "m", "p")
    @classmethod
    def check_dimension(cls, v: int) -> int:
        if v < 0:
            raise ValueError(f"dimension cannot be negative, got {v}")
        return v

    @field_validator("files")
    @classmethod
    def check_files(cls, v: Dict[str, str]) -> Dict[str, str]:
        missing = [name for name in ("A", "B", "C") if name not in v]
        if missing:
            raise ValueError(f"manifest lacks matrix files for {missing}")
        unknown = sorted(set(v) - set(MATRIX_NAMES))
        if unknown:
            raise ValueError(f"unknown matrix names {unknown}")
        return v


@dataclass(eq=False)
class ModelPackage:
    manifest: ModelManifest
    model: StateSpaceModel
    directory: Optional[Path] = None

    @property
    def name(self) -> str:
        return self.manifest.name


def _tokens(path: Path):
    """(line number, token) pairs, skipping blank and '#' lines"""
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.split("#", 1)[0].strip()
            if stripped:
                for token in stripped.split():
                    yield lineno, token


def read_matrix(path: Union[str, Path]) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ModelFormatError(str(path), None, "matrix file not found")
    tokens = _tokens(path)
    header = [next(tokens, (None, None)) for _ in range(2)]
    if any(tok is None for _, tok in header):
        raise ModelFormatError(str(path), 1, "missing 'rows cols' header")
    try:
        rows, cols = (int(tok) for _, tok in header)
    except ValueError:
        raise ModelFormatError(str(path), header[0][0], f"header must be two integers, got {header[0][1]!r} {header[1][1]!r}")
    if rows < 0 or cols < 0:
        raise ModelFormatError(str(path), header[0][0], f"negative matrix size {rows}x{cols}")

    values = np.empty(rows * cols)
    count = 0
    last_line = header[1][0]
    for lineno, token in tokens:
        last_line = lineno
        if count == values.size:
            raise ModelFormatError(str(path), lineno, f"more than {rows}x{cols} = {values.size} values")
        try:
            values[count] = float(token)
        except ValueError:
            raise ModelFormatError(str(path), lineno, f"cannot parse {token!r} as a number")
        if not np.isfinite(values[count]):
            raise ModelFormatError(str(path), lineno, f"non-finite value {token!r}")
        count += 1
    if count != values.size:
        raise ModelFormatError(str(path), last_line, f"expected {values.size} values for {rows}x{cols}, found {count}")
    return values.reshape(rows, cols)


def _format_matrix(M: np.ndarray) -> str:
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    for row in M:
        lines.append(" ".join(format(float(x), ".17g") for x in row))
    return "\n".join(lines) + "\n"


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    """Write to a temporary file in the target directory, then rename over the target"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix(path: Union[str, Path], M) -> None:
    atomic_write_text(path, _format_matrix(np.atleast_2d(np.asarray(M, dtype=float))))


def load_model(path: Union[str, Path]) -> ModelPackage:
    """Load a package directory (or its manifest file) and check every dimension"""
    path = Path(path)
    manifest_path = path / MANIFEST_NAME if path.is_dir() else path
    if not manifest_path.exists():
        raise ModelFormatError(str(manifest_path), None, "manifest not found")
    try:
        with open(manifest_path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(str(manifest_path), exc.lineno, f"invalid JSON: {exc.msg}")
    try:
        manifest = ModelManifest(**raw)
    except (ValidationError, TypeError) as exc:
        raise ModelFormatError(str(manifest_path), None, f"invalid manifest: {exc}")

    root = manifest_path.parent
    matrices = {name: read_matrix(root / fname) for name, fname in manifest.files.items()}
    expected = {
        "A": (manifest.n, manifest.n),
        "B": (manifest.n, manifest.m),
        "C": (manifest.p, manifest.n),
        "D": (manifest.p, manifest.m),
    }
    for name, M in matrices.items():
        if M.shape != expected[name]:
            raise ModelDimensionError(
                f"{root / manifest.files[name]} is {M.shape[0]}x{M.shape[1]} but "
                f"{manifest_path} declares {name} as {expected[name][0]}x{expected[name][1]}"
            )
    if "D" not in matrices:
        logger.info(f"{manifest.name}: no D file, using zero {manifest.p}x{manifest.m} feedthrough")
        matrices["D"] = np.zeros(expected["D"])

    model = StateSpaceModel(matrices["A"], matrices["B"], matrices["C"], matrices["D"])
    model.require_consistent()
    logger.info(f"Loaded model {manifest.name}: n={model.n}, m={model.m}, p={model.p}")
    return ModelPackage(manifest, model, root)


def save_model_package(
    model: StateSpaceModel,
    directory: Union[str, Path],
    name: str,
    *,
    include_d: bool = True,
    description: Optional[str] = None,
) -> ModelPackage:
    model.require_consistent()
    directory = Path(directory)
    names = MATRIX_NAMES if include_d else MATRIX_NAMES[:3]
    files = {key: f"{key}.txt" for key in names}
    for key in names:
        write_matrix(directory / files[key], getattr(model, key))
    manifest = ModelManifest(name=name, n=model.n, m=model.m, p=model.p, files=files, description=description)
    atomic_write_text(directory / MANIFEST_NAME, json.dumps(manifest.model_dump(exclude_none=True), indent=2) + "\n")
    logger.info(f"Saved model package {name} to {directory}")
    return ModelPackage(manifest, model, directory)


def _dense(M) -> np.ndarray:
    if sparse.issparse(M):
        M = M.toarray()
    return np.atleast_2d(np.asarray(M, dtype=float))


def read_matrix_market(path: Union[str, Path]) -> np.ndarray:
    return _dense(spio.mmread(str(path)))


def read_mat_file(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """A, B, C (and D when present) from a MATLAB benchmark file; keys are case-insensitive"""
    try:
        raw = spio.loadmat(str(path))
    except FileNotFoundError:
        raise ModelFormatError(str(path), None, "file not found")
    except (ValueError, TypeError, spio.matlab.MatReadError) as exc:
        raise ModelFormatError(str(path), None, f"unreadable MATLAB file: {exc}")
    contents = {key.upper(): value for key, value in raw.items() if not key.startswith("__")}
    missing = [key for key in ("A", "B", "C") if key not in contents]
    if missing:
        raise ModelFormatError(str(path), None, f"MATLAB file lacks {missing}")
    return {key: _dense(contents[key]) for key in MATRIX_NAMES if key in contents}


def convert_benchmark(
    sources: Dict[str, Union[str, Path]],
    directory: Union[str, Path],
    name: str,
) -> ModelPackage:
    """
    Convert benchmark matrices to a package. `sources` maps "mat" to a .mat
    file, or matrix names to .mtx files.
    """
    if "mat" in sources:
        matrices = read_mat_file(sources["mat"])
    else:
        matrices = {key: read_matrix_market(src) for key, src in sources.items()}
    missing = [key for key in ("A", "B", "C") if key not in matrices]
    if missing:
        raise ModelFormatError(", ".join(str(s) for s in sources.values()), None, f"no source for {missing}")

    A, B, C = matrices["A"], matrices["B"], matrices["C"]
    # single-output benchmarks are often stored with C as a column
    if C.shape[1] != A.shape[0] and C.shape[0] == A.shape[0]:
        C = C.T
    D = matrices.get("D", np.zeros((C.shape[0], B.shape[1])))
    model = StateSpaceModel(A, B, C, D)
    errors = model.dimension_errors()
    if errors:
        raise ModelDimensionError(f"{name}: " + "; ".join(errors))
    return save_model_package(model, directory, name, include_d="D" in matrices)
