"""Central tolerance and default-parameter record."""
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # algebra-core
    zero_norm: float = 1e-14          # times dim
    cstar_identity: float = 1e-10     # times norm(a)**2
    normality: float = 1e-8           # times norm(a)**2
    hermitian_imag: float = 1e-10     # times norm(a)
    contour_nodes: int = 512
    contour_min_distance: float = 0.1
    eigen_distance: float = 1e-6
    # leibniz-ops
    leibniz_exact: float = 1e-12
    star_sample: int = 20
    max_recursion: int = 16
    # funcalc
    phi_sweep_max: int = 400
    phi_cap: float = 100.0
    tail_cutoff: float = 1e-18
    resolvent_margin: float = 0.05
    grid_count: int = 1024


DEFAULT = Tolerances()


def with_overrides(**kw):
    return replace(DEFAULT, **kw)
