"""Counter-style stream derivation.

Every random stream is a Philox generator keyed by a hash of
``(master_seed, domain, *ids)``.  Simulators derive one stream per
(path block, generation) so results never depend on how blocks are
distributed over workers.
"""
from __future__ import annotations

import numpy as np

# Fixed number of paths sharing one stream; part of the reproducibility contract.
BLOCK_SIZE = 4096

DOMAINS = {"discrete": 1, "sde": 2, "path": 3, "test": 4, "martingale": 5, "sde_path": 6}


def stream(master_seed: int, domain: str | int, *ids: int) -> np.random.Generator:
    """Independent generator for ``(master_seed, domain, ids)``."""
    tag = DOMAINS[domain] if isinstance(domain, str) else int(domain)
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(tag, *map(int, ids)))
    return np.random.Generator(np.random.Philox(seq))


def blocks(n_paths: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int, int]]:
    """Partition ``range(n_paths)`` into ``(block_id, start, stop)`` triples."""
    return [(i, s, min(s + block_size, n_paths))
            for i, s in enumerate(range(0, n_paths, block_size))]
