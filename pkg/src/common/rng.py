"""Counter-based random substreams.

Every stream is a Philox generator keyed by ``(base_seed, purpose, *indices)``
through ``SeedSequence`` spawn keys, so the draws of one site or replica never
depend on how many other streams exist or on which worker consumes them.
"""
from enum import IntEnum
from typing import Sequence

import numpy as np

STREAM_SCHEME = "philox-seedseq-v1"


class StreamPurpose(IntEnum):
    ENVIRONMENT = 1
    SSEP = 2
    ARROWS = 3
    QUENCHED = 4
    REPLICA = 5
    PILOT = 6


def zigzag(x: int) -> int:
    # 0, -1, 1, -2, 2, ... -> 0, 1, 2, 3, 4, ...
    return 2 * x if x >= 0 else -2 * x - 1


def substream(base_seed: int, purpose: StreamPurpose, *indices: int) -> np.random.Generator:
    key: Sequence[int] = (int(purpose), *(zigzag(int(i)) for i in indices))
    seq = np.random.SeedSequence(entropy=int(base_seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


def site_stream(base_seed: int, purpose: StreamPurpose, site: int) -> np.random.Generator:
    return substream(base_seed, purpose, site)


def replica_seed(base_seed: int, index: int) -> int:
    """Seed of replica ``index``; depends only on (base_seed, index)."""
    seq = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(StreamPurpose.REPLICA), int(index)))
    return int(seq.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


def pilot_seed(base_seed: int, round_: int) -> int:
    """Base seed of pilot round ``round_``, disjoint from every replica seed of the main run."""
    seq = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(StreamPurpose.PILOT), int(round_)))
    return int(seq.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))
