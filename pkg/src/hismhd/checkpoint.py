"""Self-describing binary checkpoint container.

Layout (all little-endian):

    bytes 0..7    magic "HISMHD01"
    bytes 8..15   uint64 number of named header values
    then per header value: 16-byte NUL-padded ASCII name + float64 value
    then six complex128 coefficient arrays in C order, component-major:
    u_x, u_y, u_z, b_x, b_y, b_z, each n^3 values (real/imag interleaved).

The header carries the grid (n, box_length), time, the step controller's
next dt, and every simulation parameter, so a checkpoint alone restarts a
run bit-for-bit.
"""

import struct

import numpy as np

from .dynamics import State
from .initdata import SimParams
from .spectral import make_grid

MAGIC = b"HISMHD01"
_NAME_BYTES = 16


class CheckpointError(ValueError):
    pass


def _header_items(grid, state, params, dt_next):
    items = [
        ("n", float(grid.n)),
        ("box_length", grid.box_length),
        ("t", state.t),
        ("dt_next", float(dt_next)),
    ]
    for name in params.names():
        items.append((name, float(getattr(params, name))))
    return items


def write_checkpoint(path, grid, state: State, params: SimParams, dt_next: float = 0.0):
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        items = _header_items(grid, state, params, dt_next)
        fh.write(struct.pack("<Q", len(items)))
        for name, value in items:
            raw = name.encode("ascii")
            if len(raw) > _NAME_BYTES:
                raise CheckpointError(f"header name too long: {name}")
            fh.write(raw.ljust(_NAME_BYTES, b"\0"))
            fh.write(struct.pack("<d", value))
        for comp in range(3):
            fh.write(np.ascontiguousarray(state.u[comp], dtype="<c16").tobytes())
        for comp in range(3):
            fh.write(np.ascontiguousarray(state.b[comp], dtype="<c16").tobytes())


def read_checkpoint(path):
    """Returns (grid, state, params, header dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise CheckpointError(f"bad magic {magic!r}; not a checkpoint file")
        (count,) = struct.unpack("<Q", fh.read(8))
        header = {}
        for _ in range(count):
            name = fh.read(_NAME_BYTES).rstrip(b"\0").decode("ascii")
            (value,) = struct.unpack("<d", fh.read(8))
            header[name] = value
        n = int(header["n"])
        grid = make_grid(n, header["box_length"])
        count3 = n**3
        fields = []
        for _ in range(2):
            comps = []
            for _ in range(3):
                raw = fh.read(16 * count3)
                if len(raw) != 16 * count3:
                    raise CheckpointError("truncated coefficient data")
                comps.append(np.frombuffer(raw, dtype="<c16").reshape(n, n, n))
            fields.append(np.ascontiguousarray(np.stack(comps)))
    params_kwargs = {
        name: header[name] for name in SimParams().names() if name in header
    }
    if "seed" in params_kwargs:
        params_kwargs["seed"] = int(params_kwargs["seed"])
    params = SimParams(**params_kwargs)
    state = State(u=fields[0], b=fields[1], t=header["t"])
    return grid, state, params, header
