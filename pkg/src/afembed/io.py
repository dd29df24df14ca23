"""JSON forms of the library types.

Complex matrices are nested lists whose entries are ``[re, im]`` pairs; plain
real numbers are accepted on input as well. Parsing failures raise
:class:`ParseError` naming the JSON path (and, for syntax errors, the line),
while values that parse but break a type invariant raise
:class:`InvariantViolation`.
"""
from __future__ import annotations

import json
import numbers
import re
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from .algebra import BlockMatrix, DimensionVector, FdAlgebra, MappingMatrix, as_dims
from .bratteli import BratteliChain
from .cpmaps import CpMap
from .errors import AfembedError, InvariantViolation, ParseError
from .ultrasim import DEFAULT_DEGREE, DEFAULT_W, IndexedFamily, UltraElement


def _read_text(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read file ({exc.strerror})") from exc


def _decode(text: str, path: Path) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def load_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    return _decode(_read_text(path), path)


_PATH_TOKEN = re.compile(r"\.(\w+)|\[(\d+)\]")
_WS = re.compile(r"\s*")
_LEADING_PATH = re.compile(r"(\$[^\s:]*): ")


def locate(text: str, path: str):
    """``(line, column)`` of the value at JSON path ``path`` (``$.a[1].b``) in ``text``, or None."""
    tokens = [key if key else int(idx) for key, idx in _PATH_TOKEN.findall(path)]
    dec = json.JSONDecoder()
    skip = lambda p: _WS.match(text, p).end()
    try:
        pos = skip(0)
        for tok in tokens:
            if isinstance(tok, str):
                if text[pos] != "{":
                    return None
                pos = skip(pos + 1)
                while True:
                    if text[pos] == "}":
                        return None
                    key, pos = dec.raw_decode(text, pos)
                    pos = skip(skip(pos) + 1)  # past the colon
                    if key == tok:
                        break
                    _, pos = dec.raw_decode(text, pos)
                    pos = skip(pos)
                    if text[pos] == ",":
                        pos = skip(pos + 1)
            else:
                if text[pos] != "[":
                    return None
                pos = skip(pos + 1)
                for _ in range(tok):
                    _, pos = dec.raw_decode(text, pos)
                    pos = skip(pos)
                    if text[pos] != ",":
                        return None
                    pos = skip(pos + 1)
                if text[pos] == "]":
                    return None
    except (IndexError, ValueError):
        return None
    return text.count("\n", 0, pos) + 1, pos - text.rfind("\n", 0, pos)


def read_input(path: Union[str, Path], parser, *args, **kwargs) -> Any:
    """Load ``path`` and apply ``parser``; errors are prefixed with the file and source line."""
    path = Path(path)
    text = _read_text(path)
    data = _decode(text, path)
    try:
        return parser(data, *args, **kwargs)
    except (ParseError, InvariantViolation) as exc:
        m = _LEADING_PATH.match(exc.message)
        pos = locate(text, m.group(1)) if m else None
        where = f"line {pos[0]}, column {pos[1]}: " if pos else ""
        raise type(exc)(f"{path}: {where}{exc.message}") from None


def _require(obj, key: str, where: str):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in obj:
        raise ParseError(f"{where}: missing key {key!r}")
    return obj[key]


def parse_complex(value, where: str = "$") -> complex:
    if isinstance(value, bool):
        raise ParseError(f"{where}: booleans are not numbers")
    if isinstance(value, numbers.Real):
        return complex(value)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, numbers.Real) and not isinstance(v, bool) for v in value)):
        return complex(value[0], value[1])
    raise ParseError(f"{where}: malformed complex number {value!r}; expected [re, im]")


def parse_matrix(value, where: str = "$") -> np.ndarray:
    if not isinstance(value, list) or not value or not isinstance(value[0], list):
        raise ParseError(f"{where}: expected a non-empty list of rows")
    width = len(value[0])
    out = np.zeros((len(value), width), dtype=complex)
    for r, row in enumerate(value):
        if not isinstance(row, list) or len(row) != width:
            raise ParseError(f"{where}[{r}]: row must be a list of {width} entries")
        for c, entry in enumerate(row):
            out[r, c] = parse_complex(entry, f"{where}[{r}][{c}]")
    return out


def encode_matrix(x: np.ndarray) -> List[List[List[float]]]:
    x = np.asarray(x, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in x]


def parse_int_list(value, where: str) -> List[int]:
    if not isinstance(value, list):
        raise ParseError(f"{where}: expected a list of integers")
    out = []
    for k, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ParseError(f"{where}[{k}]: {v!r} is not an integer")
        out.append(v)
    return out


def parse_dims(obj, where: str = "$") -> DimensionVector:
    raw = obj["dims"] if isinstance(obj, dict) else obj
    entries = parse_int_list(raw, f"{where}.dims" if isinstance(obj, dict) else where)
    try:
        return DimensionVector(entries)
    except InvariantViolation as exc:
        raise InvariantViolation(f"{where}: {exc.message}") from None


def parse_algebra(obj, where: str = "$") -> FdAlgebra:
    dims = parse_dims({"dims": _require(obj, "dims", where)}, where)
    return FdAlgebra(dims, obj.get("label"))


def encode_dims(d) -> Dict[str, Any]:
    return {"dims": list(as_dims(d))}


def parse_mapping_matrix(obj, where: str = "$") -> MappingMatrix:
    entries = _require(obj, "entries", where)
    if not isinstance(entries, list):
        raise ParseError(f"{where}.entries: expected a list of rows")
    rows = [parse_int_list(r, f"{where}.entries[{k}]") for k, r in enumerate(entries)]
    try:
        mat = MappingMatrix(rows)
    except InvariantViolation as exc:
        raise InvariantViolation(f"{where}: {exc.message}") from None
    if "rows" in obj and obj["rows"] != mat.rows:
        raise InvariantViolation(f"{where}: declared rows {obj['rows']} but found {mat.rows}")
    if "cols" in obj and obj["cols"] != mat.cols:
        raise InvariantViolation(f"{where}: declared cols {obj['cols']} but found {mat.cols}")
    return mat


def encode_mapping_matrix(m: MappingMatrix) -> Dict[str, Any]:
    return {"rows": m.rows, "cols": m.cols, "entries": m.tolist()}


def parse_chain(obj, where: str = "$") -> BratteliChain:
    algs = _require(obj, "algebras", where)
    incs = obj.get("inclusions", [])
    if not isinstance(algs, list) or not isinstance(incs, list):
        raise ParseError(f"{where}: algebras and inclusions must be lists")
    algebras = [parse_algebra(a, f"{where}.algebras[{k}]") for k, a in enumerate(algs)]
    inclusions = [parse_mapping_matrix(m, f"{where}.inclusions[{k}]") for k, m in enumerate(incs)]
    try:
        return BratteliChain(tuple(algebras), tuple(inclusions))
    except AfembedError as exc:
        raise InvariantViolation(f"{where}: {exc.message}") from None


def encode_chain(chain: BratteliChain) -> Dict[str, Any]:
    return {"algebras": [encode_dims(a.dims) for a in chain.algebras],
            "inclusions": [encode_mapping_matrix(m) for m in chain.inclusions]}


def parse_block_matrix(obj, dims=None, where: str = "$") -> BlockMatrix:
    if isinstance(obj, dict):
        dims = parse_dims({"dims": _require(obj, "dims", where)}, where)
        blocks = _require(obj, "blocks", where)
    else:
        blocks = obj
    if dims is None:
        raise ParseError(f"{where}: block matrix needs dims")
    if not isinstance(blocks, list) or len(blocks) != len(dims):
        raise ParseError(f"{where}: expected {len(dims)} blocks")
    mats = [parse_matrix(b, f"{where}.blocks[{k}]") for k, b in enumerate(blocks)]
    for k, (m, n) in enumerate(zip(mats, dims)):
        if m.shape != (n, n):
            raise InvariantViolation(f"{where}.blocks[{k}]: shape {m.shape}, expected ({n}, {n})")
    return BlockMatrix(dims, mats)


def encode_block_matrix(x: BlockMatrix) -> Dict[str, Any]:
    return {"dims": list(x.dims), "blocks": [encode_matrix(b) for b in x.blocks]}


def parse_cp_map(obj, where: str = "$") -> CpMap:
    n = _require(obj, "source_dim", where)
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InvariantViolation(f"{where}.source_dim: {n!r} must be a positive integer")
    target = parse_dims({"dims": _require(obj, "target_dims", where)}, f"{where}.target_dims")
    choi = parse_matrix(_require(obj, "choi", where), f"{where}.choi")
    try:
        return CpMap(n, FdAlgebra(target), choi)
    except AfembedError as exc:
        raise InvariantViolation(f"{where}: {exc.message}") from None


def encode_cp_map(m: CpMap) -> Dict[str, Any]:
    return {"source_dim": m.source_dim, "target_dims": list(m.target_dims),
            "choi": encode_matrix(m.choi)}


def parse_family(obj, truncation=None, window=None, where: str = "$") -> IndexedFamily:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    W = window if window is not None else obj.get("window", DEFAULT_W)
    degree = obj.get("degree", DEFAULT_DEGREE)
    if "algebras" in obj:
        algs = obj["algebras"]
        if not isinstance(algs, list):
            raise ParseError(f"{where}.algebras: expected a list")
        algebras = [parse_algebra(a, f"{where}.algebras[{k}]") for k, a in enumerate(algs)]
        if truncation is not None:
            algebras = algebras[:truncation]
    else:
        alg = parse_algebra(_require(obj, "algebra", where), f"{where}.algebra")
        T = truncation if truncation is not None else _require(obj, "length", where)
        algebras = [alg] * int(T)
    try:
        return IndexedFamily(tuple(algebras), int(W), int(degree))
    except AfembedError as exc:
        raise InvariantViolation(f"{where}: {exc.message}") from None


def parse_element(obj, family: IndexedFamily, where: str = "$") -> UltraElement:
    terms = _require(obj, "terms", where) if isinstance(obj, dict) else obj
    if not isinstance(terms, list):
        raise ParseError(f"{where}.terms: expected a list")
    if len(terms) < family.T:
        raise InvariantViolation(f"{where}: {len(terms)} terms, family has length {family.T}")
    parsed = [parse_block_matrix(t, alg.dims, f"{where}.terms[{i}]")
              for i, (t, alg) in enumerate(zip(terms, family.algebras))]
    bound = obj.get("declared_bound") if isinstance(obj, dict) else None
    try:
        return UltraElement(family, parsed, bound)
    except AfembedError as exc:
        raise InvariantViolation(f"{where}: {exc.message}") from None


def parse_matrix_list(obj, key: str = "elements", where: str = "$") -> List[np.ndarray]:
    items = obj[key] if isinstance(obj, dict) else obj
    if not isinstance(items, list) or not items:
        raise ParseError(f"{where}.{key}: expected a non-empty list of matrices")
    return [parse_matrix(x, f"{where}.{key}[{k}]") for k, x in enumerate(items)]


def parse_units(obj, where: str = "$"):
    """``{"dims": [...], "units": [{"index": [k, i, j], "matrix": M}, ...]}``."""
    dims = parse_dims({"dims": _require(obj, "dims", where)}, f"{where}.dims")
    raw = _require(obj, "units", where)
    if not isinstance(raw, list):
        raise ParseError(f"{where}.units: expected a list")
    units = {}
    for k, entry in enumerate(raw):
        idx = parse_int_list(_require(entry, "index", f"{where}.units[{k}]"),
                             f"{where}.units[{k}].index")
        if len(idx) != 3:
            raise ParseError(f"{where}.units[{k}].index: expected [block, row, col]")
        units[tuple(idx)] = parse_matrix(_require(entry, "matrix", f"{where}.units[{k}]"),
                                         f"{where}.units[{k}].matrix")
    return dims, units


def to_jsonable(obj):
    """Recursively convert reports to plain JSON values."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, MappingMatrix):
        return encode_mapping_matrix(obj)
    if isinstance(obj, BlockMatrix):
        return encode_block_matrix(obj)
    if isinstance(obj, DimensionVector):
        return list(obj)
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_matrix(obj) if obj.ndim == 2 else [[float(v.real), float(v.imag)] for v in obj]
        return obj.tolist()
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2)
