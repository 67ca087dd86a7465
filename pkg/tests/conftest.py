import random

import numpy as np
import pytest

from grouptree.encoding import EncodedDataset, GroupSchema


def make_schema(sizes):
    groups, f = [], 0
    for c, size in enumerate(sizes):
        groups.append(tuple((f + t, f"col{c}", f"v{t}") for t in range(size)))
        f += size
    return GroupSchema(groups=tuple(groups))


def random_dataset(rng: random.Random, n_samples, sizes, labels=None):
    """Uniform one-hot dataset with the given group sizes."""
    schema = make_schema(sizes)
    matrix = np.zeros((n_samples, schema.n_features), dtype=np.uint8)
    for i in range(n_samples):
        for g, size in enumerate(sizes):
            feats = schema.features_of(g)
            matrix[i, feats[rng.randrange(size)]] = 1
    if labels is None:
        labels = [rng.choice([-1, 1]) for _ in range(n_samples)]
    return EncodedDataset(
        matrix=matrix,
        labels=np.array(labels, dtype=np.int8),
        schema=schema,
    )


@pytest.fixture
def rng():
    return random.Random(20240817)
