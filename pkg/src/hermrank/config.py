"""Centralized numerical defaults.

Every CLI run echoes ``DEFAULTS`` (merged with its flags) into its output
header, so a result file is enough to reproduce it.
"""
from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class Defaults:
    nodes: int = 200
    indicator_nodes: int = 2000
    order: int = 30
    rank_tol: float = 1e-8
    clamp_rel: float = 1e-10
    n_grid: tuple = field(default_factory=lambda: tuple(2**j for j in range(10, 16)))
    replicates: int = 500
    min_replicates: int = 200
    base_seed: int = 0

    def to_dict(self):
        d = asdict(self)
        d["n_grid"] = list(self.n_grid)
        return d


DEFAULTS = Defaults()
