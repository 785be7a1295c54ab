"""Snapshot and trajectory file formats.

Snapshot CSV:  a header line `M, lam, time, real_flag` followed by one
`m, re, im` line per stored mode, where m is the integer lattice index
(the physical frequency is m / lam).  The binary variant carries the same
header as text, then little-endian float64 (re, im) pairs in mode order.

Trajectory files concatenate a metadata header (M, lam, coefficients,
dispersion constants, damping, dt) with per-snapshot blocks holding time,
the accumulated phase integral, and the field.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .spectral import FrequencyGrid, SpectralField
from .evolve import Trajectory

_MAGIC = b"QMKDV1\n"


def write_snapshot_csv(path, field: SpectralField, time: float = 0.0):
    g = field.grid
    lines = [f"{g.num_modes},{float(g.period_scale)!r},{float(time)!r},{int(field.real)}"]
    for m, c in zip(g.mode_indices(), field.coeffs):
        lines.append(f"{m},{float(c.real)!r},{float(c.imag)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot_csv(path) -> tuple[SpectralField, float]:
    rows = Path(path).read_text().strip().splitlines()
    m_str, lam_str, t_str, real_str = rows[0].split(",")
    grid = FrequencyGrid(int(m_str), float(lam_str))
    coeffs = np.zeros(2 * grid.max_mode + 1, dtype=complex)
    for row in rows[1:]:
        m_s, re_s, im_s = row.split(",")
        coeffs[int(m_s) + grid.max_mode] = float(re_s) + 1j * float(im_s)
    return SpectralField(grid, coeffs, real=bool(int(real_str))), float(t_str)


def _pack_field(field: SpectralField) -> bytes:
    pairs = np.empty(2 * len(field.coeffs), dtype="<f8")
    pairs[0::2] = field.coeffs.real
    pairs[1::2] = field.coeffs.imag
    return pairs.tobytes()


def _unpack_field(buf: bytes, grid: FrequencyGrid, real: bool) -> SpectralField:
    pairs = np.frombuffer(buf, dtype="<f8")
    coeffs = pairs[0::2] + 1j * pairs[1::2]
    return SpectralField(grid, coeffs.astype(complex), real=real)


def write_snapshot_binary(path, field: SpectralField, time: float = 0.0):
    g = field.grid
    header = f"{g.num_modes},{g.period_scale!r},{time!r},{int(field.real)}\n"
    Path(path).write_bytes(_MAGIC + header.encode() + _pack_field(field))


def read_snapshot_binary(path) -> tuple[SpectralField, float]:
    blob = Path(path).read_bytes()
    if not blob.startswith(_MAGIC):
        raise ValueError(f"{path} is not a recognised snapshot file")
    body = blob[len(_MAGIC):]
    nl = body.index(b"\n")
    m_str, lam_str, t_str, real_str = body[:nl].decode().split(",")
    grid = FrequencyGrid(int(m_str), float(lam_str))
    field = _unpack_field(body[nl + 1:], grid, bool(int(real_str)))
    return field, float(t_str)


def write_trajectory(path, traj: Trajectory):
    """Binary trajectory: metadata header, then per-snapshot blocks."""
    g = traj.fields[0].grid
    meta = traj.meta
    header_fields = [
        f"M={g.num_modes}",
        f"lam={g.period_scale!r}",
        f"coeffs={','.join(repr(c) for c in meta.get('coeffs', ()))}",
        f"c1={meta.get('c1', 0.0)!r}",
        f"c2={meta.get('c2', 0.0)!r}",
        f"c3={meta.get('c3', 0.0)!r}",
        f"eps={meta.get('epsilon', 0.0)!r}",
        f"dt={meta.get('dt', 0.0)!r}",
        f"snapshots={len(traj)}",
        f"truncated={int(traj.truncated)}",
    ]
    out = io.BytesIO()
    out.write(_MAGIC)
    out.write(("; ".join(header_fields) + "\n").encode())
    for t, phi, f in zip(traj.times, traj.phase, traj.fields):
        out.write(struct.pack("<dd", t, phi))
        out.write(_pack_field(f))
    Path(path).write_bytes(out.getvalue())


def read_trajectory(path) -> Trajectory:
    blob = Path(path).read_bytes()
    if not blob.startswith(_MAGIC):
        raise ValueError(f"{path} is not a recognised trajectory file")
    body = blob[len(_MAGIC):]
    nl = body.index(b"\n")
    meta: dict = {}
    for item in body[:nl].decode().split("; "):
        key, val = item.split("=", 1)
        meta[key] = val
    grid = FrequencyGrid(int(meta["M"]), float(meta["lam"]))
    count = int(meta["snapshots"])
    coeffs_meta = tuple(float(x) for x in meta["coeffs"].split(",")) if meta[
        "coeffs"
    ] else ()

    traj = Trajectory(meta={
        "coeffs": coeffs_meta,
        "c1": float(meta["c1"]),
        "c2": float(meta["c2"]),
        "c3": float(meta["c3"]),
        "epsilon": float(meta["eps"]),
        "dt": float(meta["dt"]),
        "num_modes": grid.num_modes,
        "period_scale": grid.period_scale,
    })
    traj.truncated = bool(int(meta["truncated"]))
    offset = nl + 1
    field_bytes = 16 * (2 * grid.max_mode + 1)
    for _ in range(count):
        t, phi = struct.unpack_from("<dd", body, offset)
        offset += 16
        f = _unpack_field(body[offset : offset + field_bytes], grid, True)
        offset += field_bytes
        traj.append(t, f, phi)
    return traj


def write_monitor_csv(path, traj: Trajectory, seed: int | None = None):
    """Per-snapshot conservation monitors in the standard column layout."""
    lines = []
    if seed is not None:
        lines.append(f"# seed={seed}")
    lines.append(
        "time,gamma1_rel_drift,gamma2_rel_drift,ham3_rel_drift,hs_norm,phase_integral"
    )
    for row in traj.monitors:
        lines.append(
            f"{row.time!r},{row.gamma1_rel_drift!r},{row.gamma2_rel_drift!r},"
            f"{row.ham3_rel_drift!r},{row.hs_norm!r},{row.phase_integral!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
