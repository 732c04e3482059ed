"""Chart points, uniform-step trajectories and their CSV/JSON file formats."""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, KindMismatchError

TANGENT = "tangent"
PHASE = "phase"


def _frozen(v, name):
    arr = np.array(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries: {arr}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TangentState:
    """Point ``(x, v)`` of a tangent-bundle chart at time ``t``."""

    x: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x, "x"))
        object.__setattr__(self, "v", _frozen(self.v, "v"))
        object.__setattr__(self, "t", float(self.t))
        if self.x.shape != self.v.shape:
            raise InputError(f"x and v differ in length: {self.x.shape} vs {self.v.shape}")

    @property
    def n(self):
        return self.x.shape[0]

    def vector(self):
        return np.concatenate([self.x, self.v])


@dataclass(frozen=True)
class PhaseState:
    """Point ``(x, xi)`` of a cotangent-bundle chart at time ``t``; ``xi`` holds covector components."""

    x: np.ndarray
    xi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x, "x"))
        object.__setattr__(self, "xi", _frozen(self.xi, "xi"))
        object.__setattr__(self, "t", float(self.t))
        if self.x.shape != self.xi.shape:
            raise InputError(f"x and xi differ in length: {self.x.shape} vs {self.xi.shape}")

    @property
    def n(self):
        return self.x.shape[0]

    def vector(self):
        return np.concatenate([self.x, self.xi])


@dataclass(frozen=True)
class Trajectory:
    """Uniform-step samples of a motion; ``states[i]`` is the ``2n`` vector at ``t0 + i*dt``."""

    t0: float
    dt: float
    states: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (TANGENT, PHASE):
            raise InputError(f"unknown trajectory kind {self.kind!r}")
        states = np.array(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] < 2 or states.shape[1] % 2:
            raise InputError(f"states must be (N >= 2, 2n), got {states.shape}")
        if not self.dt > 0:
            raise InputError("dt must be positive")
        states.flags.writeable = False
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self):
        return self.states.shape[0]

    @property
    def n(self):
        return self.states.shape[1] // 2

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(len(self))

    @property
    def positions(self):
        return self.states[:, : self.n]

    @property
    def fibre(self):
        """Velocities for tangent trajectories, momenta for phase ones."""
        return self.states[:, self.n :]

    def state(self, i):
        t = self.t0 + self.dt * (i % len(self))
        x, y = self.states[i, : self.n], self.states[i, self.n :]
        return TangentState(x, y, t) if self.kind == TANGENT else PhaseState(x, y, t)

    def __iter__(self):
        return (self.state(i) for i in range(len(self)))

    def require(self, kind):
        if self.kind != kind:
            raise KindMismatchError(f"expected a {kind} trajectory, got {self.kind}")
        return self


def fmt(value):
    """Shortest round-trip decimal for a float."""
    return repr(float(value))


def csv_header(traj, charge_names=()):
    n = traj.n
    fib = "v" if traj.kind == TANGENT else "xi"
    return ["t"] + [f"x{i + 1}" for i in range(n)] + [f"{fib}{i + 1}" for i in range(n)] + ["E"] + list(charge_names)


def trajectory_csv(traj, energy, charges=None):
    """Render ``t,x1..xn,(v|xi)1..n,E,charges...``; ``charges`` maps column name to a sample series."""
    charges = charges or {}
    energy = np.asarray(energy, dtype=float)
    if energy.shape != (len(traj),):
        raise InputError("energy series length does not match the trajectory")
    cols = [np.asarray(c, dtype=float) for c in charges.values()]
    if any(c.shape != (len(traj),) for c in cols):
        raise InputError("charge series length does not match the trajectory")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(traj, charges.keys()))
    times = traj.times
    for i in range(len(traj)):
        row = [times[i], *traj.states[i], energy[i], *(c[i] for c in cols)]
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_trajectory_csv(path, traj, energy, charges=None):
    with open(path, "w", newline="") as fh:
        fh.write(trajectory_csv(traj, energy, charges))


def read_trajectory_csv(path):
    """Parse a trajectory CSV back into ``(Trajectory, energy, charges)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array([[float(v) for v in r] for r in rows[1:]])
    n = sum(1 for h in header if h.startswith("x") and not h.startswith("xi"))
    kind = TANGENT if header[1 + n].startswith("v") else PHASE
    t = body[:, 0]
    dt = t[1] - t[0]
    traj = Trajectory(t[0], dt, body[:, 1 : 1 + 2 * n], kind)
    energy = body[:, 1 + 2 * n]
    charges = {name: body[:, 2 + 2 * n + k] for k, name in enumerate(header[2 + 2 * n :])}
    return traj, energy, charges


def sidecar(traj):
    """Integration metadata written next to a trajectory CSV."""
    return {
        "method": traj.meta.get("method"),
        "dt": traj.dt,
        "t_end": traj.t0 + traj.dt * (len(traj) - 1),
    }


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
