"""Brownian and random-walk paths reduced to gridded local-time fields.

Two backends produce a :class:`LocalTimeField`:

``lattice_walk``
    A simple random walk with spacing ``bin_width`` and time step
    ``bin_width**2`` (the Donsker embedding). Site visits are counted
    exactly, so occupation bookkeeping is exact. With ``bin_width = 1`` the
    field holds the raw visit counts ``l_n^x``.
``brownian``
    Exact Gaussian increments of variance ``dt``; each sampled position
    deposits ``dt / bin_width`` into the bin that contains it.

Bins are centred on integer multiples of ``bin_width`` with 0 a bin centre,
so a probe shift ``h = k * bin_width`` moves the grid onto itself.
"""

import io
import math
import struct
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels, _rng

MODES = ("brownian", "lattice_walk")

# dt may exceed bin_width**2 / 4 by this relative slack (float round-off)
_DT_SLACK = 1e-12
_CHUNK = 1 << 20


def _readonly(a, dtype=None):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters shared by every path of a batch.

    ``dt`` defaults to ``bin_width**2 / 4`` in brownian mode. In lattice mode
    the time step is fixed at ``bin_width**2`` and an explicit ``dt`` must
    agree with it.
    """

    t_horizon: float
    bin_width: float
    dt: float | None = None
    n_paths: int = 1
    master_seed: int = 0
    mode: str = "brownian"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (self.t_horizon > 0 and math.isfinite(self.t_horizon)):
            raise ValueError("t_horizon must be positive")
        if not (self.bin_width > 0 and math.isfinite(self.bin_width)):
            raise ValueError("bin_width must be positive")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValueError("n_paths must be a positive integer")
        _rng.check_seed(self.master_seed)
        d2 = self.bin_width ** 2
        if self.mode == "brownian":
            if self.dt is not None:
                if not self.dt > 0:
                    raise ValueError("dt must be positive")
                if self.dt > d2 / 4 * (1 + _DT_SLACK):
                    raise ValueError(
                        f"dt={self.dt} exceeds bin_width**2/4={d2 / 4}; "
                        "the time step must resolve the bin scale")
        elif self.dt is not None and abs(self.dt - d2) > 1e-12 * d2:
            raise ValueError(f"lattice mode fixes dt = bin_width**2 = {d2}")

    @property
    def step_time(self):
        if self.mode == "lattice_walk":
            return self.bin_width ** 2
        return self.dt if self.dt is not None else self.bin_width ** 2 / 4

    def n_steps(self, t_horizon=None):
        t = self.t_horizon if t_horizon is None else t_horizon
        return max(1, int(round(t / self.step_time)))

    def path_seed(self, index, arm=_rng.ARM_STAT):
        return _rng.path_seed(self.master_seed, index, arm)


@dataclass(frozen=True)
class LatticePath:
    """A simple random walk S_0 = 0, S_i = S_{i-1} + steps[i-1]."""

    n_steps: int
    steps: np.ndarray

    def __post_init__(self):
        steps = _readonly(self.steps, np.int8)
        if steps.ndim != 1 or steps.shape[0] != self.n_steps:
            raise ValueError("steps must be a 1-D array of length n_steps")
        if self.n_steps < 1:
            raise ValueError("a walk needs at least one step")
        if not np.all(np.abs(steps) == 1):
            raise ValueError("steps must be +1 or -1")
        object.__setattr__(self, "steps", steps)

    @property
    def positions(self):
        """S_1, ..., S_n."""
        return np.cumsum(self.steps, dtype=np.int64)


@dataclass(frozen=True)
class LocalTimeField:
    """Occupation density on the grid ``(start + i) * bin_width``.

    ``values`` are time per unit space. ``dt`` is the time resolution of the
    occupation sampling and ``source`` names the backend that produced it.
    """

    start: int
    bin_width: float
    values: np.ndarray
    t_horizon: float
    dt: float = 0.0
    source: str = "brownian"
    meta: dict = dc_field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = _readonly(self.values, np.float64)
        if v.ndim != 1:
            raise ValueError("values must be 1-D")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("local-time values must be finite and non-negative")
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "start", int(self.start))

    @property
    def origin(self):
        """Space coordinate of the first bin centre."""
        return self.start * self.bin_width

    @property
    def stop(self):
        return self.start + self.values.shape[0]

    @property
    def x(self):
        return (self.start + np.arange(self.values.shape[0])) * self.bin_width

    def occupation(self):
        """bin_width * sum(values); equals the horizon up to sampling error."""
        return self.bin_width * float(np.sum(self.values))

    def shifted(self, k):
        """The same field translated by ``k`` bins."""
        return LocalTimeField(self.start + int(k), self.bin_width, self.values,
                              self.t_horizon, self.dt, self.source)


def gen_walk(n_steps, seed):
    """Simple random walk of ``n_steps`` steps drawn from stream ``seed``."""
    if int(n_steps) != n_steps or n_steps < 1:
        raise ValueError("n_steps must be a positive integer")
    n = int(n_steps)
    words = _rng.raw_words(seed, n)
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")[:n]
    return LatticePath(n, 2 * bits.astype(np.int8) - 1)


def walk_local_time(path):
    """Exact visit counts l_n^x = #{1 <= i <= n : S_i = x}, bin width 1."""
    pos = path.positions
    lo = int(pos.min())
    counts = np.bincount(pos - lo)
    return LocalTimeField(lo, 1.0, counts.astype(np.float64), float(path.n_steps),
                          dt=1.0, source="lattice")


def lattice_local_time(n_steps, bin_width, seed):
    """Local-time field of a walk with spacing ``bin_width`` and time step
    ``bin_width**2``; draws the same steps as :func:`gen_walk`."""
    n = int(n_steps)
    if n < 1:
        raise ValueError("n_steps must be a positive integer")
    words = _rng.raw_words(seed, n)
    lo, hi = _kernels.walk_extent(words, n)
    counts = _kernels.walk_counts(words, n, lo, hi)
    d = float(bin_width)
    return LocalTimeField(lo, d, counts * d, n * d * d, dt=d * d, source="lattice")


def gen_bm_local_time(cfg, seed, *, rescale=1.0, t_horizon=None):
    """Binned occupation density of a Brownian path on the ``cfg`` grid.

    With ``rescale = h`` the increments are those of the same path, but the
    field is that of the rescaled motion ``h**-1 W(h**2 s)`` over the horizon
    ``t / h**2``, binned on the unchanged grid.
    """
    if cfg.mode != "brownian":
        raise ValueError("gen_bm_local_time needs a brownian-mode config")
    h = float(rescale)
    if not h > 0:
        raise ValueError("rescale must be positive")
    dt = cfg.step_time
    d = cfg.bin_width
    if dt / h ** 2 > d * d / 4 * (1 + _DT_SLACK):
        raise ValueError(
            f"rescaled time step dt/h^2={dt / h ** 2} exceeds bin_width**2/4; "
            "refine dt")
    n = cfg.n_steps(t_horizon)
    g = _rng.generator(seed)
    sd = math.sqrt(dt)
    inv = 1.0 / (d * h)
    w = 0.0
    lo = 0
    counts = np.zeros(1, np.int64)
    done = 0
    while done < n:
        m = min(_CHUNK, n - done)
        idx, w = _kernels.bin_increments(g.standard_normal(m), sd, w, inv)
        clo = int(idx.min())
        c = np.bincount(idx - clo)
        new_lo = min(lo, clo)
        new_hi = max(lo + counts.shape[0], clo + c.shape[0])
        if new_lo < lo or new_hi > lo + counts.shape[0]:
            grown = np.zeros(new_hi - new_lo, np.int64)
            grown[lo - new_lo:lo - new_lo + counts.shape[0]] = counts
            counts, lo = grown, new_lo
        counts[clo - lo:clo - lo + c.shape[0]] += c
        done += m
    # trim zero bins left over from the initial allocation at 0
    nz = np.flatnonzero(counts)
    counts = counts[nz[0]:nz[-1] + 1]
    lo += int(nz[0])
    step = dt / h ** 2
    return LocalTimeField(lo, d, counts * (step / d), n * step, dt=step, source="brownian")


def gen_local_time(cfg, seed, t_horizon=None):
    """One path of ``cfg`` (either backend), optionally to another horizon."""
    if cfg.mode == "lattice_walk":
        return lattice_local_time(cfg.n_steps(t_horizon), cfg.bin_width, seed)
    return gen_bm_local_time(cfg, seed, t_horizon=t_horizon)


def rescale_path_field(field, h, bin_width=None):
    """Relabel a field under Brownian scaling.

    The path ``h**-1 W(h**2 s)`` has local time ``h**-1 L^{h y}_t`` at level
    ``y`` and time ``t / h**2``. Relabelling is exact: bins keep their
    contents, the width becomes ``bin_width / h`` and values are divided by
    ``h``. When a target ``bin_width`` is given, the relabelled bins are
    merged onto that coarser grid; the merge must be by an odd integer
    factor, otherwise bins centred on 0 would straddle two targets.
    """
    h = float(h)
    if not h > 0:
        raise ValueError("h must be positive")
    d = field.bin_width / h
    out = LocalTimeField(field.start, d, field.values / h, field.t_horizon / h ** 2,
                         field.dt / h ** 2, field.source)
    if bin_width is None or math.isclose(bin_width, d, rel_tol=1e-12):
        return out
    r = bin_width / d
    ri = int(round(r))
    if ri < 1 or abs(r - ri) > 1e-9 * r or ri % 2 == 0:
        raise ValueError(
            f"rescaled bin width {d} does not tile target width {bin_width} "
            "with an odd integer ratio; the bins would alias")
    half = ri // 2
    # coarse bin j collects fine bins j*ri - half .. j*ri + half
    j_lo = math.floor((out.start + half) / ri)
    j_hi = math.floor((out.stop - 1 + half) / ri)
    fine = np.zeros((j_hi - j_lo + 1) * ri)
    off = out.start - (j_lo * ri - half)
    fine[off:off + out.values.shape[0]] = out.values
    merged = fine.reshape(-1, ri).sum(axis=1) / ri
    return LocalTimeField(j_lo, float(bin_width), merged, out.t_horizon, out.dt, out.source)


# -- serialization ---------------------------------------------------------

_MAGIC = b"LTFD"
_VERSION = 1
_HEADER = struct.Struct("<4sHdddQ")


def dump_field(field, fp):
    """Binary dump: magic, version, bin width, origin, horizon, length, values.

    All numbers little-endian; values are float64.
    """
    fp.write(_HEADER.pack(_MAGIC, _VERSION, field.bin_width, field.origin,
                          field.t_horizon, field.values.shape[0]))
    fp.write(field.values.astype("<f8").tobytes())


def load_field(fp):
    raw = fp.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise ValueError("truncated field header")
    magic, version, width, origin, t, length = _HEADER.unpack(raw)
    if magic != _MAGIC:
        raise ValueError("not a local-time field dump")
    if version != _VERSION:
        raise ValueError(f"unsupported field dump version {version}")
    data = fp.read(8 * length)
    if len(data) != 8 * length:
        raise ValueError("truncated field values")
    values = np.frombuffer(data, dtype="<f8").astype(np.float64)
    start = int(round(origin / width))
    return LocalTimeField(start, width, values, t)


def field_to_csv(field):
    buf = io.StringIO()
    buf.write("x,value\n")
    for x, v in zip(field.x, field.values):
        buf.write(f"{float(x)!r},{float(v)!r}\n")
    return buf.getvalue()
