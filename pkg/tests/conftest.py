"""Shared fixtures and helpers.

Heavy emission runs used by several acceptance criteria are cached on
disk (tests/.cache) keyed by a hash of the resolved configuration, so a
re-run of the suite after an interrupted or partial pass reuses finished
results.  Delete tests/.cache to force recomputation.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np
import pytest

from ohmicline.config import ExperimentConfig, dumps
from ohmicline.experiments import ExperimentRecord, RUNNERS

CACHE_DIR = os.path.join(os.path.dirname(__file__), ".cache")


def config_key(config: ExperimentConfig) -> str:
    return hashlib.sha256(dumps(config).encode()).hexdigest()[:16]


def _save_record(path: str, record: ExperimentRecord):
    arrays = {}
    for group, data in (("series", record.series),
                        ("profiles", record.profiles),
                        ("grids", record.grids)):
        for name, arr in data.items():
            arrays[f"{group}.{name}"] = np.asarray(arr)
    np.savez_compressed(path + ".npz", **arrays)
    with open(path + ".json", "w") as fh:
        json.dump({"metadata": record.metadata, "scalars": record.scalars},
                  fh, default=float)


def _load_record(path: str) -> ExperimentRecord:
    with open(path + ".json") as fh:
        head = json.load(fh)
    record = ExperimentRecord(metadata=head["metadata"],
                              scalars=head["scalars"])
    with np.load(path + ".npz") as data:
        for key in data.files:
            group, name = key.split(".", 1)
            getattr(record, group)[name] = data[key]
    return record


def cached_run(config: ExperimentConfig) -> ExperimentRecord:
    """Run a scenario, or return the cached result of an identical one."""
    os.makedirs(CACHE_DIR, exist_ok=True)
    path = os.path.join(CACHE_DIR, f"{config.scenario}-{config_key(config)}")
    if os.path.exists(path + ".json") and os.path.exists(path + ".npz"):
        return _load_record(path)
    record = RUNNERS[config.scenario](config)
    _save_record(path, record)
    return record


@pytest.fixture
def rng():
    return np.random.default_rng(7)
