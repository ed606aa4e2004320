"""Shared fixtures. Randomized fixtures honor the ASMB_SEED env var so a
failing draw can be reproduced exactly; the engine itself uses no randomness.
"""

import math
import os
import random

import pytest

from asmb.transforms import RigidTransform, Vec3, quat_canonical


def base_seed() -> int:
    return int(os.environ.get("ASMB_SEED", "1337"))


@pytest.fixture
def rng(request) -> random.Random:
    # per-test stream: reordering tests does not reshuffle anyone's draws
    return random.Random(f"{base_seed()}:{request.node.name}")


def random_quat(rng: random.Random):
    while True:
        parts = [rng.gauss(0.0, 1.0) for _ in range(4)]
        if math.sqrt(sum(p * p for p in parts)) > 1e-3:
            return quat_canonical(*parts)


def random_transform(rng: random.Random, span: float = 5.0) -> RigidTransform:
    return RigidTransform(
        random_quat(rng),
        Vec3(*(rng.uniform(-span, span) for _ in range(3))),
    )
