"""Deterministic PPM rendering of Dijkstra-coloured clusters in the plane."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from ._engine import window_args
from .errors import InvalidArgument
from .graph_model import GraphSpec, Window
from .random_field import FieldParams

MODES = ("hop_distance", "passage_time")
BACKGROUND = (255, 255, 255)


def _cyclic_palette() -> tuple:
    """64 colours: red, yellow, green, blue, magenta in four linear ramps of 16."""
    out = []
    for j in range(16):
        out.append((255, 16 * j, 0))
    for j in range(16):
        out.append((255 - 16 * j, 255, 0))
    for j in range(16):
        out.append((0, 255 - 16 * j, 16 * j))
    for j in range(16):
        out.append((16 * j, 0, 255))
    return tuple(out)


PALETTES = {"cyclic64": _cyclic_palette()}


@dataclass(frozen=True)
class RenderJob:
    g: GraphSpec
    params: FieldParams
    width: int
    palette: str = "cyclic64"
    mode: str = "hop_distance"
    stop_at_border: bool = False

    def __post_init__(self):
        if self.g.d != 2:
            raise InvalidArgument("rendering needs a planar graph")
        if self.width < 1:
            raise InvalidArgument("viewport half-width must be >= 1")
        if self.mode not in MODES:
            raise InvalidArgument(f"mode must be one of {MODES}")
        if self.palette not in PALETTES:
            raise InvalidArgument(f"unknown palette {self.palette!r}")

    @property
    def size(self) -> int:
        return 2 * self.width + 1


def settled(job: RenderJob):
    """Coordinates and distances of the vertices the search settles.

    By default every vertex of the viewport reachable from the origin is
    settled, so larger ``p`` always yields a superset.  ``stop_at_border``
    halts at the first settled vertex on the viewport edge.
    """
    window = Window.box(2, job.width)
    k0, k1 = job.params.key
    origin = np.zeros(2, dtype=np.int64)
    _, _, _, coords, dists, _ = K.dijkstra_one(
        k0, k1, job.params.p, job.g.dirs_array, origin, *window_args(window).as_tuple(), np.int64(2),
        origin, np.int64(0), job.mode == "hop_distance", job.stop_at_border, np.int64(2**62), True, False)
    return coords, dists


def render_cluster(job: RenderJob) -> bytes:
    """Binary PPM (P6); colour index is the settled distance modulo 64."""
    coords, dists = settled(job)
    table = np.array(PALETTES[job.palette], dtype=np.uint8)
    img = np.empty((job.size, job.size, 3), dtype=np.uint8)
    img[:] = BACKGROUND
    rows = job.width - coords[:, 1]
    cols = coords[:, 0] + job.width
    img[rows, cols] = table[dists % len(table)]
    header = f"P6\n{job.size} {job.size}\n255\n".encode("ascii")
    return header + img.tobytes()


def read_ppm(data: bytes) -> np.ndarray:
    """Inverse of :func:`render_cluster` for the header layout it writes."""
    magic, dims, maxval, body = data.split(b"\n", 3)
    if magic != b"P6" or maxval != b"255":
        raise InvalidArgument("not an 8-bit P6 image")
    w, h = map(int, dims.split())
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3)
