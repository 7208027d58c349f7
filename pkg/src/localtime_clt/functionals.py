"""Path functionals of local-time fields and the normalized CLT statistics.

All integrals over space are Riemann sums on the field grid. Probe shifts
must be integer multiples of the bin width, and modulus sums run over the
support padded by the shift on both sides so boundary terms are included.
"""

import io
import math
from dataclasses import dataclass

import numpy as np

from . import pathsim

KINDS = ("single_h", "single_t", "cross_h", "cross_t")

# Relative tolerance for "h is a multiple of bin_width"
_ALIGN_TOL = 1e-9


def probe_bins(field, h):
    """Number of bins spanned by the probe shift ``h``."""
    k = h / field.bin_width
    ki = int(round(k))
    if ki < 1 or abs(k - ki) > _ALIGN_TOL * max(k, 1.0):
        raise ValueError(
            f"probe shift h={h} is not a positive multiple of bin width {field.bin_width}")
    return ki


def _check_grid(f1, f2):
    if f1.bin_width != f2.bin_width:
        raise ValueError(
            f"grid mismatch: bin widths {f1.bin_width} and {f2.bin_width}")


def _common(f1, f2, pad):
    _check_grid(f1, f2)
    lo = min(f1.start, f2.start) - pad
    hi = max(f1.stop, f2.stop) + pad
    a = np.zeros(hi - lo)
    b = np.zeros(hi - lo)
    a[f1.start - lo:f1.stop - lo] = f1.values
    b[f2.start - lo:f2.stop - lo] = f2.values
    return a, b


def alpha(field):
    """Self-intersection local time, integral of (L^x)^2 dx."""
    v = field.values
    return field.bin_width * float(np.dot(v, v))


def debiased_alpha(field):
    """:func:`alpha` plus the lattice shortfall ``t * dt / delta``.

    A walk field counts each visit pair once on the diagonal where the
    continuum sum weighs it twice; zero correction for brownian fields.
    """
    if field.source != "lattice":
        return alpha(field)
    return alpha(field) + field.t_horizon * field.dt / field.bin_width


def beta(f1, f2):
    """Intersection local time of two fields on the same grid."""
    _check_grid(f1, f2)
    lo = max(f1.start, f2.start)
    hi = min(f1.stop, f2.stop)
    if hi <= lo:
        return 0.0
    a = f1.values[lo - f1.start:hi - f1.start]
    b = f2.values[lo - f2.start:hi - f2.start]
    return f1.bin_width * float(np.dot(a, b))


def _increments(v, k):
    vp = np.zeros(v.shape[0] + 2 * k)
    vp[k:k + v.shape[0]] = v
    return vp[k:] - vp[:-k]


def sq_modulus(field, h):
    """Integral of (L^{x+h} - L^x)^2 dx over the real line."""
    k = probe_bins(field, h)
    d = _increments(field.values, k)
    return field.bin_width * float(np.dot(d, d))


def lattice_offset(field):
    """Mean shortfall of :func:`sq_modulus` on a lattice-walk field.

    For a walk with spacing ``delta`` and time step ``delta**2`` the
    expected modulus equals the Brownian one minus ``2 t delta`` plus terms
    of order ``delta**2`` (the same-time visit pairs are counted once where
    the continuum Kac sum needs them twice). Zero for brownian fields.
    """
    if field.source != "lattice":
        return 0.0
    return 2.0 * field.t_horizon * field.dt / field.bin_width


def debiased_sq_modulus(field, h):
    """:func:`sq_modulus` plus :func:`lattice_offset`."""
    return sq_modulus(field, h) + lattice_offset(field)


def cross_modulus(f1, f2, h):
    """Integral of (L^{x+h} - L^x)(L~^{x+h} - L~^x) dx; may be negative."""
    k = probe_bins(f1, h)
    a, b = _common(f1, f2, k)
    return f1.bin_width * float(np.dot(a[k:] - a[:-k], b[k:] - b[:-k]))


def hamiltonian(path):
    """Polymer Hamiltonian

        H_n = sum_{i != j} 1{S_i = S_j} - 1/2 sum_{i != j} 1{|S_i - S_j| = 1}

    evaluated from the visit counts as (sum l^2 - n) - sum l^x l^{x+1}.
    """
    counts = np.bincount(path.positions - int(path.positions.min())).astype(np.int64)
    same = int(np.dot(counts, counts)) - path.n_steps
    adjacent = int(np.dot(counts[:-1], counts[1:]))
    return same - adjacent


@dataclass(frozen=True)
class StatSample:
    value: float
    statistic_kind: str
    h: float
    t: float
    seed: int

    def __post_init__(self):
        if self.statistic_kind not in KINDS:
            raise ValueError(f"unknown statistic kind {self.statistic_kind!r}")
        if not math.isfinite(self.value):
            raise ValueError("statistic value must be finite")
        if not (self.h > 0 and self.t > 0):
            raise ValueError("h and t must be positive")


def normalized_stat(field, kind, *, h=1.0, t=None, other=None, seed=0,
                    centering=None, debias=False):
    """Normalized modulus statistic of one field (or a pair for cross kinds).

    ``single_h``: (M_h - c) / h^{3/2} with default centering c = 4 h t.
    ``single_t``: (M_1 - c) / t^{3/4} with default centering c = 4 t.
    ``cross_h``:  (C_h - c) / h^{3/2}, default c = 0.
    ``cross_t``:  (C_1 - c) / t^{3/4}, default c = 0.

    M_h is :func:`sq_modulus` and C_h is :func:`cross_modulus`. ``t``
    defaults to the field horizon. ``centering`` overrides c, e.g. with the
    exact finite-horizon mean. ``debias`` adds :func:`lattice_offset`.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown statistic kind {kind!r}")
    if t is None:
        t = field.t_horizon
    if kind.endswith("_t"):
        h = 1.0
    if kind.startswith("cross"):
        if other is None:
            raise ValueError(f"{kind} needs a second field")
        raw = cross_modulus(field, other, h)
        c = 0.0 if centering is None else centering
    else:
        raw = debiased_sq_modulus(field, h) if debias else sq_modulus(field, h)
        c = (4.0 * h * t if kind == "single_h" else 4.0 * t) if centering is None else centering
    scale = h ** 1.5 if kind.endswith("_h") else t ** 0.75
    return StatSample((raw - c) / scale, kind, float(h), float(t), int(seed))


def stat_samples_csv(samples):
    """StatSample rows as CSV with columns kind,h,t,seed,value."""
    buf = io.StringIO()
    buf.write("kind,h,t,seed,value\n")
    for s in samples:
        buf.write(f"{s.statistic_kind},{float(s.h)!r},{float(s.t)!r},{s.seed},{float(s.value)!r}\n")
    return buf.getvalue()


@dataclass(frozen=True)
class ScalingReport:
    h: float
    t: float
    direct: float            # M_h at horizon t
    rebinned: float          # h^3 * M_1 of the rescaled path, binned on the same grid
    relabelled: float        # h^3 * M_1 of the exactly relabelled field
    relative_deviation: float
    relabel_deviation: float
    bin_width: float


def scaling_check(cfg, seed, h):
    """Pathwise check of the scaling identity

        M_h(t) = h^3 * M_1(t / h^2)

    on one driving path. The rescaled side is produced from the same
    increments and binned on the unchanged grid, so its discretization is
    finer by the factor h; the deviation measures discretization error.
    Lattice walks only rescale exactly at h = 1.
    """
    h = float(h)
    if cfg.mode == "lattice_walk":
        if h != 1.0:
            raise ValueError("a lattice walk rescaled by h != 1 aliases the lattice")
        f = pathsim.lattice_local_time(cfg.n_steps(), cfg.bin_width, seed)
        g = f
    else:
        f = pathsim.gen_bm_local_time(cfg, seed)
        g = pathsim.gen_bm_local_time(cfg, seed, rescale=h)
    probe_bins(f, h)
    probe_bins(g, 1.0)
    direct = sq_modulus(f, h)
    rebinned = h ** 3 * sq_modulus(g, 1.0)
    relabelled = h ** 3 * sq_modulus(pathsim.rescale_path_field(f, h), 1.0)
    rel = abs(direct - rebinned) / direct if direct > 0 else abs(rebinned)
    rel_exact = abs(direct - relabelled) / direct if direct > 0 else abs(relabelled)
    return ScalingReport(h, f.t_horizon, direct, rebinned, relabelled, rel, rel_exact,
                         cfg.bin_width)


def scaling_ladder(bin_widths, h, *, t=1.0, seeds=(0,), mode="brownian"):
    """Mean relative deviation of the scaling identity along a grid ladder.

    Every rung bins the same paths: the time step is fixed by the finest
    rung (``(min(bin_widths) * h)**2 / 4`` in brownian mode). Returns a list
    of (bin_width, mean deviation, per-seed reports).
    """
    bws = [float(b) for b in bin_widths]
    dt = (min(bws) * h) ** 2 / 4 if mode == "brownian" else None
    out = []
    for b in bws:
        cfg = pathsim.SimConfig(t, b, dt, 1, 0, mode)
        reps = [scaling_check(cfg, int(s), h) for s in seeds]
        out.append((b, float(np.mean([r.relative_deviation for r in reps])), reps))
    return out
