"""View identities and pair graphs.

Edges always pair a real view with its own frame's virtual views (spatial
edges) or two real views (temporal edges).  Virtual views never pair with
each other, and a virtual view never pairs with a real view from a
different frame: the mirror constraint only relates a frame to itself.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError, EmptyVideo, FrameError, NoVirtualViews

Edge = tuple["ViewId", "ViewId"]


@dataclass(frozen=True)
class ViewId:
    """Identifies a view: the real camera or the k-th virtual camera of a frame."""

    kind: str            # "real" | "virtual"
    index: int = 0       # virtual view index, >= 1; 0 for real views
    frame_time: int = 0

    def __post_init__(self):
        if self.kind not in ("real", "virtual"):
            raise ConfigError(f"unknown view kind {self.kind!r}")
        if self.kind == "real" and self.index != 0:
            raise ConfigError("real views have index 0")
        if self.kind == "virtual" and self.index < 1:
            raise ConfigError("virtual view index starts at 1")
        if self.frame_time < 0:
            raise ConfigError("frame_time must be >= 0")

    @classmethod
    def real(cls, frame_time: int = 0) -> "ViewId":
        return cls("real", 0, frame_time)

    @classmethod
    def virtual(cls, index: int = 1, frame_time: int = 0) -> "ViewId":
        return cls("virtual", index, frame_time)

    def __str__(self) -> str:
        if self.kind == "real":
            return f"real:{self.frame_time}"
        return f"virtual:{self.index}@{self.frame_time}"

    @classmethod
    def parse(cls, s: str) -> "ViewId":
        try:
            if s.startswith("real:"):
                return cls.real(int(s.split(":", 1)[1]))
            if s.startswith("virtual:"):
                body = s.split(":", 1)[1]
                idx, t = body.split("@")
                return cls.virtual(int(idx), int(t))
        except (ValueError, IndexError):
            pass
        raise ConfigError(f"cannot parse view id {s!r}")


def _check_edge(a: ViewId, b: ViewId) -> None:
    if a == b:
        raise ConfigError(f"self-edge ({a}, {b}) is not allowed")
    if a.kind == "virtual" and b.kind == "virtual":
        raise FrameError(f"virtual-virtual edge ({a}, {b}) is not allowed")
    if a.kind != b.kind:
        real, vir = (a, b) if a.kind == "real" else (b, a)
        if real.frame_time != vir.frame_time:
            raise FrameError(
                f"cross-frame real-virtual edge ({a}, {b}) is not allowed")


@dataclass(frozen=True)
class PairGraph:
    """An ordered, duplicate-free collection of view pairs."""

    edges: tuple[Edge, ...]
    window: int | None = None

    def __post_init__(self):
        seen = set()
        for a, b in self.edges:
            _check_edge(a, b)
            if (a, b) in seen:
                raise ConfigError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))

    def views(self) -> list[ViewId]:
        out: list[ViewId] = []
        for a, b in self.edges:
            for v in (a, b):
                if v not in out:
                    out.append(v)
        return out

    def to_json(self) -> list[dict]:
        return [{"a": str(a), "b": str(b)} for a, b in self.edges]

    @classmethod
    def from_json(cls, rows: list[dict], window: int | None = None) -> "PairGraph":
        edges = tuple((ViewId.parse(r["a"]), ViewId.parse(r["b"])) for r in rows)
        return cls(edges, window)


def build_static(n_virtual: int) -> PairGraph:
    """Single-frame graph: the real view paired with each virtual view."""
    if n_virtual < 1:
        raise NoVirtualViews("a static pair graph needs at least one virtual view")
    real = ViewId.real(0)
    edges = tuple((real, ViewId.virtual(i, 0)) for i in range(1, n_virtual + 1))
    return PairGraph(edges)


def _edge_key(edge: Edge) -> tuple[int, int, int]:
    a, b = edge
    lo = min(a.frame_time, b.frame_time)
    hi = max(a.frame_time, b.frame_time)
    spatial = 0 if (a.kind != b.kind) else 1
    return (lo, hi, spatial)


def build_video(n_frames: int, window: int) -> PairGraph:
    """Sliding-window graph over a monocular video with one mirror view per frame.

    Every frame contributes its spatial edge (real_i, virtual_i); every
    window [t, t + window], clamped to the sequence and slid with stride 1,
    contributes temporal edges (real_a, real_b) for a < b inside it.
    Temporal edges connect real views exclusively.  Edges are deduplicated
    and ordered by (min frame, max frame, spatial before temporal).
    """
    if n_frames < 1:
        raise EmptyVideo("video pair graph needs at least one frame")
    if window < 0:
        raise ConfigError("window must be >= 0")
    edges: set[Edge] = set()
    for t in range(n_frames):
        edges.add((ViewId.real(t), ViewId.virtual(1, t)))
    for start in range(n_frames):
        stop = min(start + window, n_frames - 1)
        frames = range(start, stop + 1)
        for a in frames:
            for b in frames:
                if a < b:
                    edges.add((ViewId.real(a), ViewId.real(b)))
    ordered = tuple(sorted(edges, key=lambda e: (_edge_key(e), str(e[0]), str(e[1]))))
    return PairGraph(ordered, window=window)
