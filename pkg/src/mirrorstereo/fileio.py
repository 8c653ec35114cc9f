"""File formats: binary PGM (P5), ASCII PLY, correspondence CSV, JSON helpers.

All writers are deterministic: floats are formatted with %.17g (lossless for
float64), JSON keys are sorted, and row order follows input order.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParseError, ShapeError
from .geometry import CameraPose, FrameTag, Intrinsics, MirrorPlane

_FLOAT_FMT = "%.17g"

# PLY property type per numpy kind we emit.
_PLY_TYPES = {"f": "double", "i": "int", "u": "uchar", "b": "uchar"}


def fmt_float(x: float) -> str:
    return _FLOAT_FMT % float(x)


# ---------------------------------------------------------------------------
# PGM (binary, 8-bit, P5)
# ---------------------------------------------------------------------------

def write_pgm(path: str | Path, image: np.ndarray) -> None:
    """Write an 8-bit grayscale image as binary PGM (P5)."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ShapeError(f"PGM wants a 2-d array, got shape {img.shape}")
    img = img.astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(img.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary 8-bit PGM (P5) into a (H, W) uint8 array."""
    raw = Path(path).read_bytes()
    if not raw.startswith(b"P5"):
        raise ParseError("not a binary PGM (missing P5 magic)", str(path), 1)
    # Header tokens: magic, width, height, maxval; '#' starts a comment.
    tokens: list[bytes] = []
    i = 2
    while len(tokens) < 3 and i < len(raw):
        c = raw[i:i + 1]
        if c == b"#":
            while i < len(raw) and raw[i:i + 1] != b"\n":
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(raw) and not raw[j:j + 1].isspace():
                j += 1
            tokens.append(raw[i:j])
            i = j
    if len(tokens) < 3:
        raise ParseError("truncated PGM header", str(path), 1)
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ParseError("non-integer PGM header fields", str(path), 1)
    if maxval != 255:
        raise ParseError(f"only 8-bit PGM supported, maxval = {maxval}", str(path), 1)
    i += 1  # single whitespace byte after maxval
    data = raw[i:i + w * h]
    if len(data) != w * h:
        raise ParseError(
            f"expected {w * h} pixel bytes, found {len(data)}", str(path))
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w).copy()


# ---------------------------------------------------------------------------
# ASCII PLY point clouds
# ---------------------------------------------------------------------------

def write_ply(path: str | Path, points: np.ndarray,
              extras: dict[str, np.ndarray] | None = None) -> None:
    """Write points (N, 3) plus optional per-point columns as ASCII PLY."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    extras = extras or {}
    cols: list[tuple[str, np.ndarray]] = []
    header = ["ply", "format ascii 1.0", f"element vertex {len(pts)}"]
    for name in ("x", "y", "z"):
        header.append(f"property double {name}")
    for name, col in extras.items():
        col = np.asarray(col).reshape(-1)
        if len(col) != len(pts):
            raise ShapeError(f"column {name!r} has {len(col)} rows, want {len(pts)}")
        ply_type = _PLY_TYPES.get(col.dtype.kind, "double")
        header.append(f"property {ply_type} {name}")
        cols.append((name, col))
    lines = ["\n".join(header) + "\nend_header"]
    for i in range(len(pts)):
        parts = [fmt_float(v) for v in pts[i]]
        for _, col in cols:
            v = col[i]
            parts.append(str(int(v)) if col.dtype.kind in "iub" else fmt_float(v))
        lines.append(" ".join(parts))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_ply(path: str | Path) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Read an ASCII PLY written by :func:`write_ply`.

    Returns (points (N, 3), extra columns by name). Raises ParseError with
    the offending line number on malformed input.
    """
    text = Path(path).read_text(encoding="ascii", errors="replace")
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError("missing 'ply' magic", str(path), 1)
    n_vertex = None
    props: list[tuple[str, str]] = []
    body_start = None
    for idx, line in enumerate(lines[1:], start=2):
        tok = line.split()
        if not tok or tok[0] == "comment":
            continue
        if tok[0] == "format":
            if tok[1:2] != ["ascii"]:
                raise ParseError("only ascii PLY supported", str(path), idx)
        elif tok[0] == "element":
            if tok[1] == "vertex":
                try:
                    n_vertex = int(tok[2])
                except (IndexError, ValueError):
                    raise ParseError("bad element count", str(path), idx)
            else:
                raise ParseError(f"unsupported element {tok[1]!r}", str(path), idx)
        elif tok[0] == "property":
            if len(tok) != 3:
                raise ParseError("malformed property line", str(path), idx)
            props.append((tok[2], tok[1]))
        elif tok[0] == "end_header":
            body_start = idx
            break
        else:
            raise ParseError(f"unexpected header token {tok[0]!r}", str(path), idx)
    if body_start is None or n_vertex is None:
        raise ParseError("truncated PLY header", str(path), len(lines))
    names = [n for n, _ in props]
    if names[:3] != ["x", "y", "z"]:
        raise ParseError("first three properties must be x y z", str(path), body_start)
    rows = np.empty((n_vertex, len(props)), dtype=float)
    for k in range(n_vertex):
        line_no = body_start + 1 + k
        if line_no > len(lines):
            raise ParseError(
                f"expected {n_vertex} vertices, file ends after {k}",
                str(path), len(lines))
        tok = lines[line_no - 1].split()
        if len(tok) != len(props):
            raise ParseError(
                f"expected {len(props)} values, got {len(tok)}", str(path), line_no)
        try:
            rows[k] = [float(t) for t in tok]
        except ValueError:
            raise ParseError("non-numeric vertex value", str(path), line_no)
    points = rows[:, :3]
    extras = {}
    for j, (name, ply_type) in enumerate(props[3:], start=3):
        col = rows[:, j]
        extras[name] = col.astype(np.int64) if ply_type in ("int", "uchar") else col
    return points, extras


# ---------------------------------------------------------------------------
# Correspondence CSV
# ---------------------------------------------------------------------------

CORRS_HEADER = "ua,va,ub,vb,weight"


def write_corrs_csv(path: str | Path, corrs: np.ndarray) -> None:
    """Write correspondences (N, 5) rows of ua, va, ub, vb, weight."""
    arr = np.asarray(corrs, dtype=float).reshape(-1, 5)
    lines = [CORRS_HEADER]
    for row in arr:
        lines.append(",".join(fmt_float(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_corrs_csv(path: str | Path) -> np.ndarray:
    text = Path(path).read_text(encoding="ascii", errors="replace")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].replace(" ", "") != CORRS_HEADER:
        raise ParseError(f"expected header {CORRS_HEADER!r}", str(path), 1)
    out = np.empty((len(lines) - 1, 5), dtype=float)
    for i, line in enumerate(lines[1:], start=2):
        tok = line.split(",")
        if len(tok) != 5:
            raise ParseError(f"expected 5 fields, got {len(tok)}", str(path), i)
        try:
            out[i - 2] = [float(t) for t in tok]
        except ValueError:
            raise ParseError("non-numeric correspondence value", str(path), i)
    return out


# ---------------------------------------------------------------------------
# JSON serialization of core types
# ---------------------------------------------------------------------------

def intrinsics_to_dict(K: Intrinsics) -> dict:
    return {"fx": K.fx, "fy": K.fy, "cx": K.cx, "cy": K.cy,
            "width": K.width, "height": K.height}


def intrinsics_from_dict(d: dict) -> Intrinsics:
    try:
        return Intrinsics(fx=float(d["fx"]), fy=float(d["fy"]),
                          cx=float(d["cx"]), cy=float(d["cy"]),
                          width=int(d["width"]), height=int(d["height"]))
    except KeyError as e:
        raise ParseError(f"intrinsics missing field {e.args[0]!r}")


def pose_to_dict(pose: CameraPose) -> dict:
    return {"quaternion": [float(v) for v in pose.quaternion],
            "translation": [float(v) for v in pose.translation]}


def pose_from_dict(d: dict) -> CameraPose:
    try:
        return CameraPose(np.asarray(d["quaternion"], dtype=float),
                          np.asarray(d["translation"], dtype=float))
    except KeyError as e:
        raise ParseError(f"pose missing field {e.args[0]!r}")


def plane_to_dict(plane: MirrorPlane) -> dict:
    return {"normal": [float(v) for v in plane.normal],
            "point": [float(v) for v in plane.point],
            "frame": str(plane.frame)}


def plane_from_dict(d: dict) -> MirrorPlane:
    try:
        return MirrorPlane(np.asarray(d["normal"], dtype=float),
                           np.asarray(d["point"], dtype=float),
                           FrameTag.parse(d["frame"]))
    except KeyError as e:
        raise ParseError(f"plane missing field {e.args[0]!r}")


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n",
                          encoding="ascii")


def read_json(path: str | Path):
    try:
        return json.loads(Path(path).read_text(encoding="ascii", errors="replace"))
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, str(path), e.lineno)
