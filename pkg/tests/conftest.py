"""Shared helpers for the test suite."""

import numpy as np
from numpy.random import default_rng

from macrobell.montecarlo import PulseRecord


def coherent_witness_records(mean_per_port: float, pulses: int, seed: int):
    """Independent Poissonian (coherent-light) records for the three settings.

    Every port of every setting is an independent Poisson variable, the
    statistics of two independent coherent beams on any analyzer.
    """
    rng = default_rng(seed)
    records = []
    for sid in ("s1", "s2", "s3"):
        counts = rng.poisson(mean_per_port, size=(pulses, 4))
        records.extend(PulseRecord(sid, *map(int, row)) for row in counts)
    return records


def random_plate_stack(rng: np.random.Generator, arm):
    """One to two random plates on the given arm."""
    from macrobell.modes import WavePlate

    plates = [WavePlate.half(rng.uniform(0, np.pi), arm)]
    if rng.random() < 0.5:
        plates.append(WavePlate.quarter(rng.uniform(0, np.pi), arm))
    return tuple(plates)
