"""Built-in tool adapters: deterministic stand-ins for the MD toolchain.

Every adapter is a pure function of (input artifacts, node parameters, node
script, seed). The chain simulator is a 1-D harmonic chain between two walls
integrated with velocity Verlet; the moving wall models uniaxial straining.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import BadParameterError
from .workflow import CrateNode

TRAJECTORY_KIND = "trajectory-table"
PLOT_KIND = "plot-data"
FRAME_LIST_KIND = "frame-list"
VIDEO_KIND = "video"
HISTOGRAM_KIND = "histogram"

TRAJECTORY_HEADER = "step,mean_force,total_energy,digest"

# Fixed-point scale of the per-step positions digest. The digest column is a
# lossy 16-bit-per-particle fingerprint of the displacement vector: compact
# enough for a CSV cell, decodable enough for downstream binning.
DIGEST_SCALE = 4096
_DIGEST_MIN = -(1 << 15)
_DIGEST_MAX = (1 << 15) - 1


def encode_positions(positions: Sequence[float]) -> str:
    chunks = []
    for x in positions:
        q = int(round(x * DIGEST_SCALE))
        q = max(_DIGEST_MIN, min(_DIGEST_MAX, q))
        chunks.append(format(q & 0xFFFF, "04x"))
    return "".join(chunks)


def decode_positions(digest: str) -> list[float]:
    if len(digest) % 4 != 0:
        raise BadParameterError("positions digest length must be a multiple of 4")
    values = []
    for i in range(0, len(digest), 4):
        q = int(digest[i : i + 4], 16)
        if q > _DIGEST_MAX:
            q -= 1 << 16
        values.append(q / DIGEST_SCALE)
    return values


@dataclass(frozen=True)
class AdapterInput:
    port: str
    kind: str
    data: bytes


@dataclass(frozen=True)
class ToolAdapter:
    """A named, deterministic crate implementation."""

    name: str
    input_kinds: tuple[str, ...]
    output_kinds: tuple[str, ...]
    run: Callable[[CrateNode, tuple[AdapterInput, ...], int], Mapping[str, bytes]]


def _int_param(params: Mapping[str, str], key: str, default: int, minimum: int) -> int:
    raw = params.get(key)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError as exc:
        raise BadParameterError(f"parameter {key!r} must be an integer, got {raw!r}") from exc
    if value < minimum:
        raise BadParameterError(f"parameter {key!r} must be >= {minimum}, got {value}")
    return value


def _float_param(
    params: Mapping[str, str], key: str, default: float, *, minimum: float | None = None,
    exclusive: bool = False,
) -> float:
    raw = params.get(key)
    if raw is None:
        return default
    try:
        value = float(raw)
    except ValueError as exc:
        raise BadParameterError(f"parameter {key!r} must be a number, got {raw!r}") from exc
    if not np.isfinite(value):
        raise BadParameterError(f"parameter {key!r} must be finite")
    if minimum is not None and (value <= minimum if exclusive else value < minimum):
        op = ">" if exclusive else ">="
        raise BadParameterError(f"parameter {key!r} must be {op} {minimum}, got {value}")
    return value


@dataclass(frozen=True)
class ChainStep:
    step: int
    mean_force: float
    total_energy: float
    digest: str


def simulate_chain(
    n_particles: int,
    steps: int,
    dt: float,
    strain_rate: float,
    v_init: float,
    seed: int,
) -> list[ChainStep]:
    """Velocity-Verlet integration of a wall-anchored harmonic chain.

    Displacement coordinates, unit masses, unit stiffness. The left wall is
    fixed at zero, the right wall displaces as strain_rate * t. Emits one row
    per step including the initial state. mean_force is the mean signed
    extension over the n+1 springs; total_energy is kinetic plus spring
    potential including both wall springs.
    """
    n = n_particles
    u = np.zeros(n)
    if v_init > 0.0:
        rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
        v = v_init * rng.standard_normal(n)
    else:
        v = np.zeros(n)

    half_dt = 0.5 * dt
    half_dt2 = 0.5 * dt * dt

    def accelerations(disp: np.ndarray, wall: float) -> np.ndarray:
        padded = np.empty(n + 2)
        padded[0] = 0.0
        padded[-1] = wall
        padded[1:-1] = disp
        return padded[:-2] - 2.0 * padded[1:-1] + padded[2:]

    def observe(step: int, disp: np.ndarray, vel: np.ndarray, wall: float) -> ChainStep:
        padded = np.empty(n + 2)
        padded[0] = 0.0
        padded[-1] = wall
        padded[1:-1] = disp
        extensions = np.diff(padded)
        mean_force = float(extensions.mean())
        energy = float(0.5 * np.dot(vel, vel) + 0.5 * np.dot(extensions, extensions))
        return ChainStep(step, mean_force, energy, encode_positions(disp.tolist()))

    rows = [observe(0, u, v, 0.0)]
    a = accelerations(u, 0.0)
    for k in range(1, steps + 1):
        wall = strain_rate * (k * dt)
        u = u + dt * v + half_dt2 * a
        a_next = accelerations(u, wall)
        v = v + half_dt * (a + a_next)
        a = a_next
        rows.append(observe(k, u, v, wall))
    return rows


def render_trajectory(rows: Sequence[ChainStep]) -> bytes:
    lines = [TRAJECTORY_HEADER]
    for row in rows:
        lines.append(
            f"{row.step},{row.mean_force:.8e},{row.total_energy:.8e},{row.digest}"
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_trajectory(data: bytes) -> list[ChainStep]:
    text = data.decode("utf-8")
    lines = [line for line in text.split("\n") if line]
    if not lines or lines[0] != TRAJECTORY_HEADER:
        raise BadParameterError("input is not a trajectory table")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 4:
            raise BadParameterError(f"malformed trajectory row: {line!r}")
        rows.append(ChainStep(int(parts[0]), float(parts[1]), float(parts[2]), parts[3]))
    return rows


def _input_of_kind(inputs: Sequence[AdapterInput], kind: str, tool: str) -> AdapterInput:
    for item in sorted(inputs, key=lambda i: i.port):
        if item.kind == kind:
            return item
    raise BadParameterError(f"{tool} needs an input of kind {kind!r}")


def _outputs_by_kind(
    node: CrateNode, produced: Mapping[str, bytes], tool: str
) -> dict[str, bytes]:
    outputs: dict[str, bytes] = {}
    for port in node.out_ports:
        data = produced.get(port.payload_kind)
        if data is None:
            raise BadParameterError(
                f"{tool} cannot produce out-port {port.name!r} of kind {port.payload_kind!r}"
            )
        outputs[port.name] = data
    return outputs


def _run_chain_sim(
    node: CrateNode, inputs: tuple[AdapterInput, ...], seed: int
) -> Mapping[str, bytes]:
    params = node.parameters
    n_particles = _int_param(params, "n_particles", 32, 1)
    steps = _int_param(params, "steps", 1000, 1)
    dt = _float_param(params, "dt", 0.01, minimum=0.0, exclusive=True)
    strain_rate = _float_param(params, "strain_rate", 0.0)
    v_init = _float_param(params, "v_init", 0.0, minimum=0.0)
    rows = simulate_chain(n_particles, steps, dt, strain_rate, v_init, seed)
    return _outputs_by_kind(node, {TRAJECTORY_KIND: render_trajectory(rows)}, "lammps-stub")


def _column_selector(node: CrateNode) -> list[str]:
    selector = "step,mean_force"
    if node.script is not None:
        for line in node.script.content.splitlines():
            stripped = line.strip()
            if stripped.startswith("select:"):
                selector = stripped[len("select:"):].strip()
                break
    columns = [c.strip() for c in selector.split(",") if c.strip()]
    if not columns:
        raise BadParameterError("script selects no columns")
    return columns


def _run_column_extract(
    node: CrateNode, inputs: tuple[AdapterInput, ...], seed: int
) -> Mapping[str, bytes]:
    table = _input_of_kind(inputs, TRAJECTORY_KIND, "r-stub")
    columns = _column_selector(node)
    header_fields = TRAJECTORY_HEADER.split(",")
    indices = []
    for name in columns:
        if name not in header_fields:
            raise BadParameterError(f"unknown column {name!r} in selector")
        indices.append(header_fields.index(name))
    lines = [line for line in table.data.decode("utf-8").split("\n") if line]
    if not lines or lines[0] != TRAJECTORY_HEADER:
        raise BadParameterError("r-stub input is not a trajectory table")
    out_lines = [",".join(columns)]
    for line in lines[1:]:
        parts = line.split(",")
        out_lines.append(",".join(parts[i] for i in indices))
    data = ("\n".join(out_lines) + "\n").encode("utf-8")
    return _outputs_by_kind(node, {PLOT_KIND: data}, "r-stub")


def _run_frame_extract(
    node: CrateNode, inputs: tuple[AdapterInput, ...], seed: int
) -> Mapping[str, bytes]:
    table = _input_of_kind(inputs, TRAJECTORY_KIND, "atomeye-stub")
    every = _int_param(node.parameters, "every", 10, 1)
    rows = parse_trajectory(table.data)
    lines = []
    frame = 0
    for row in rows:
        if row.step % every == 0:
            lines.append(f"frame={frame} step={row.step} digest={row.digest}")
            frame += 1
    data = ("\n".join(lines) + "\n").encode("utf-8") if lines else b""
    return _outputs_by_kind(node, {FRAME_LIST_KIND: data}, "atomeye-stub")


def _run_frame_concat(
    node: CrateNode, inputs: tuple[AdapterInput, ...], seed: int
) -> Mapping[str, bytes]:
    frames = _input_of_kind(inputs, FRAME_LIST_KIND, "ffmpeg-stub")
    fps = _int_param(node.parameters, "fps", 25, 1)
    body = frames.data.decode("utf-8")
    count = sum(1 for line in body.split("\n") if line)
    header = f"video/1 fps={fps} frames={count}\n"
    return _outputs_by_kind(
        node, {VIDEO_KIND: (header + body).encode("utf-8")}, "ffmpeg-stub"
    )


def histogram_counts(positions: Sequence[float], bins: int) -> list[tuple[float, float, int]]:
    """Equal-width bins over [min, max]; zero span piles everything in bin 0."""
    if bins < 1:
        raise BadParameterError(f"parameter 'bins' must be >= 1, got {bins}")
    if not positions:
        raise BadParameterError("cannot histogram an empty snapshot")
    lo = min(positions)
    hi = max(positions)
    span = hi - lo
    counts = [0] * bins
    for x in positions:
        if span == 0.0:
            idx = 0
        else:
            idx = min(int((x - lo) / span * bins), bins - 1)
        counts[idx] += 1
    width = span / bins if span else 0.0
    return [(lo + i * width, lo + (i + 1) * width, counts[i]) for i in range(bins)]


def _run_position_histogram(
    node: CrateNode, inputs: tuple[AdapterInput, ...], seed: int
) -> Mapping[str, bytes]:
    table = _input_of_kind(inputs, TRAJECTORY_KIND, "debyer-stub")
    bins = _int_param(node.parameters, "bins", 64, 1)
    rows = parse_trajectory(table.data)
    if not rows:
        raise BadParameterError("trajectory table has no rows")
    positions = decode_positions(rows[-1].digest)
    lines = ["bin,lo,hi,count"]
    for i, (lo, hi, count) in enumerate(histogram_counts(positions, bins)):
        lines.append(f"{i},{lo:.8e},{hi:.8e},{count}")
    data = ("\n".join(lines) + "\n").encode("utf-8")
    return _outputs_by_kind(node, {HISTOGRAM_KIND: data}, "debyer-stub")


def builtin_adapters() -> dict[str, ToolAdapter]:
    adapters = [
        ToolAdapter("lammps-stub", (), (TRAJECTORY_KIND,), _run_chain_sim),
        ToolAdapter("r-stub", (TRAJECTORY_KIND,), (PLOT_KIND,), _run_column_extract),
        ToolAdapter("atomeye-stub", (TRAJECTORY_KIND,), (FRAME_LIST_KIND,), _run_frame_extract),
        ToolAdapter("ffmpeg-stub", (FRAME_LIST_KIND,), (VIDEO_KIND,), _run_frame_concat),
        ToolAdapter("debyer-stub", (TRAJECTORY_KIND,), (HISTOGRAM_KIND,), _run_position_histogram),
    ]
    return {adapter.name: adapter for adapter in adapters}


def node_seed(run_seed: int, node_id: str) -> int:
    """Stable per-node seed derived from the run seed."""
    digest = hashlib.sha256(f"{run_seed}:{node_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
