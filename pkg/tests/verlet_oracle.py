"""Straightforward list-based velocity-Verlet reimplementation.

Used to cross-check the vectorized chain simulator. Shares only the seeded
initial-velocity draw (the same input data); the integration loop, force
evaluation, and energy bookkeeping are written independently with plain
Python floats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ReferenceStep:
    step: int
    mean_force: float
    total_energy: float
    positions: list[float]


def simulate_chain_reference(
    n_particles: int,
    steps: int,
    dt: float,
    strain_rate: float,
    v_init: float,
    seed: int,
) -> list[ReferenceStep]:
    n = n_particles
    u = [0.0] * n
    if v_init > 0.0:
        draws = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF).standard_normal(n)
        v = [v_init * float(x) for x in draws]
    else:
        v = [0.0] * n

    def force_on(i: int, disp: list[float], wall: float) -> float:
        left = disp[i - 1] if i > 0 else 0.0
        right = disp[i + 1] if i < n - 1 else wall
        return (left - disp[i]) + (right - disp[i])

    def observe(step: int, disp: list[float], vel: list[float], wall: float) -> ReferenceStep:
        extensions = []
        previous = 0.0
        for x in disp:
            extensions.append(x - previous)
            previous = x
        extensions.append(wall - previous)
        mean_force = sum(extensions) / len(extensions)
        kinetic = sum(0.5 * w * w for w in vel)
        potential = sum(0.5 * e * e for e in extensions)
        return ReferenceStep(step, mean_force, kinetic + potential, list(disp))

    rows = [observe(0, u, v, 0.0)]
    acc = [force_on(i, u, 0.0) for i in range(n)]
    for k in range(1, steps + 1):
        wall = strain_rate * (k * dt)
        u = [u[i] + dt * v[i] + 0.5 * dt * dt * acc[i] for i in range(n)]
        acc_next = [force_on(i, u, wall) for i in range(n)]
        v = [v[i] + 0.5 * dt * (acc[i] + acc_next[i]) for i in range(n)]
        acc = acc_next
        rows.append(observe(k, u, v, wall))
    return rows
