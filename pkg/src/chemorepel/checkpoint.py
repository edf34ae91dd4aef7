"""Binary state persistence: one JSON header line, then the two field
arrays as little-endian float64 in C order. Round-trips are bit-exact."""

import json
from dataclasses import dataclass

import numpy as np

from .dynamics import Params, State
from .grid import Field, Grid, build_grid

FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    grid: Grid
    t: float
    rho: np.ndarray
    c: np.ndarray
    params: Params
    dt: float
    format_version: int = FORMAT_VERSION

    def state(self):
        return State(rho=Field(self.grid, self.rho),
                     c=Field(self.grid, self.c), t=self.t)


def checkpoint_bytes(state, params, dt):
    g = state.rho.grid
    header = {
        "format_version": FORMAT_VERSION,
        "dim": g.dim,
        "extents": list(g.extents),
        "cells": list(g.cells),
        "t": state.t,
        "dt": float(dt),
        "params": {"chi": params.chi, "gamma": params.gamma,
                   "eps": params.eps, "M": params.M},
        "dtype": "<f8",
        "order": "C",
        "arrays": ["rho", "c"],
    }
    blob = json.dumps(header, sort_keys=True).encode("ascii") + b"\n"
    blob += np.ascontiguousarray(state.rho.values, dtype="<f8").tobytes()
    blob += np.ascontiguousarray(state.c.values, dtype="<f8").tobytes()
    return blob


def write_checkpoint(path, state, params, dt):
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(state, params, dt))


def read_checkpoint(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ValueError(f"{path}: no header line")
    header = json.loads(raw[:nl])
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: format version {version}, "
                         f"expected {FORMAT_VERSION}")
    g = build_grid(header["dim"], tuple(header["extents"]),
                   tuple(header["cells"]))
    n = g.cell_count
    data = np.frombuffer(raw[nl + 1:], dtype="<f8")
    if data.size != 2 * n:
        raise ValueError(f"{path}: payload has {data.size} values, "
                         f"expected {2 * n}")
    rho = data[:n].reshape(g.shape).copy()
    c = data[n:].reshape(g.shape).copy()
    p = header["params"]
    params = Params(chi=p["chi"], gamma=p["gamma"], eps=p["eps"], M=p["M"])
    return Checkpoint(grid=g, t=float(header["t"]), rho=rho, c=c,
                      params=params, dt=float(header["dt"]))
