"""Trajectories along rows of the distortion field S(g) J^{-T}.

A flow line follows one row of the field at a time, switching rows only
when the active row's speed decays under a hysteresis threshold, and
terminates at the domain boundary, at a length cap, or when the whole
field degenerates (the near-conformal case). Along such paths the trace
dilation obeys a pathwise derivative identity against the infinite-p
operator, and for solution maps it stays constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllRowsDegenerate, GuardViolation, RowSwitched, StepFailure
from .operators import Jet2Sample, dilation_gradient
from .tensor import ahlfors, distortion_tensor, trace_dilation

DEFAULT_STEP = 1e-3
SWITCH_THRESHOLD = 0.5
DEGENERACY_TOL = 1e-12


@dataclass
class FlowTrajectory:
    """Sampled integral curve of an active field row.

    Arrays are aligned: entry k holds the arc parameter, position,
    dilation, active row (1-based), and active-row speed of sample k.
    The sign array records the orientation the integrator applied to the
    active row at each sample.
    """

    s: np.ndarray
    x: np.ndarray
    K: np.ndarray
    row: np.ndarray
    speed: np.ndarray
    sign: np.ndarray
    terminated: str

    def __len__(self) -> int:
        return self.s.size

    def to_csv_text(self) -> str:
        n = self.x.shape[1]
        header = "s," + ",".join(f"x{j + 1}" for j in range(n)) + ",K,row,speed"
        lines = [header]
        for k in range(len(self)):
            coords = ",".join(repr(float(v)) for v in self.x[k])
            lines.append(
                f"{float(self.s[k])!r},{coords},{float(self.K[k])!r},"
                f"{int(self.row[k])},{float(self.speed[k])!r}"
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv_text())


def ball_domain(radius: float = 1.0, center=None):
    """Signed predicate of a ball: negative inside, positive outside."""

    def predicate(x: np.ndarray) -> float:
        c = 0.0 if center is None else np.asarray(center, dtype=float)
        return float(np.linalg.norm(np.asarray(x, dtype=float) - c) - radius)

    return predicate


def _field_from_jet(jet: Jet2Sample) -> np.ndarray:
    sg = ahlfors(distortion_tensor(jet.J))
    return sg @ np.swapaxes(np.linalg.inv(jet.J), -1, -2)


def flow_field(mapping, x) -> np.ndarray:
    """Matrix S(g) J^{-T} at x; its i-th row drives the i-th flow line."""
    return _field_from_jet(mapping.jet(x))


def select_row(field, current: int | None = None, threshold: float = SWITCH_THRESHOLD,
               tol: float = DEGENERACY_TOL) -> int:
    """Active-row choice with hysteresis; rows are numbered from 1.

    Keeps the current row while its norm stays at least threshold times
    the strongest row's norm, otherwise switches to the strongest row.
    The returned row always carries norm >= |field| / n^2.
    """
    f = np.asarray(field, dtype=float)
    total = float(np.sqrt(np.sum(f * f)))
    if total <= tol:
        raise AllRowsDegenerate(f"field norm {total:.3e} below degeneracy tolerance")
    norms = np.linalg.norm(f, axis=1)
    best = int(np.argmax(norms))
    if current is not None:
        cur = int(current) - 1
        if not (0 <= cur < f.shape[0]):
            raise ValueError(f"row index {current} out of range")
        if norms[cur] >= threshold * norms[best]:
            return cur + 1
    return best + 1


def trace_flowline(mapping, x0, ds: float = DEFAULT_STEP, max_len: float = 1.0,
                   domain=None) -> FlowTrajectory:
    """Integrate a flow line from x0 with classical RK4 at fixed step.

    The active row is reselected after every accepted step; on a switch
    the new row's sign is chosen to keep the angle with the previous
    velocity at most 90 degrees, preserving forward orientation. The
    walk stops at the domain boundary (located by bisection on the
    signed predicate to 1e-10), at arc parameter max_len, or when the
    field degenerates.

    domain defaults to the unit ball centered at the origin.
    """
    x = np.asarray(x0, dtype=float).copy()
    if domain is None:
        domain = ball_domain(1.0)
    if domain(x) >= 0.0:
        raise ValueError("flow line must start strictly inside the domain")

    jet = mapping.jet(x)
    k_val = float(trace_dilation(jet.J))
    field = _field_from_jet(jet)

    samples_s, samples_x, samples_k = [], [], []
    samples_row, samples_speed, samples_sign = [], [], []

    def record(s, x, k_val, row, speed, sign):
        samples_s.append(s)
        samples_x.append(np.array(x))
        samples_k.append(k_val)
        samples_row.append(row)
        samples_speed.append(speed)
        samples_sign.append(sign)

    def finish(reason: str) -> FlowTrajectory:
        return FlowTrajectory(
            s=np.array(samples_s),
            x=np.array(samples_x),
            K=np.array(samples_k),
            row=np.array(samples_row, dtype=int),
            speed=np.array(samples_speed),
            sign=np.array(samples_sign),
            terminated=reason,
        )

    def degenerate(field, k_val) -> bool:
        return float(np.sqrt(np.sum(field * field))) <= DEGENERACY_TOL * (1.0 + k_val**2)

    if degenerate(field, k_val):
        norms = np.linalg.norm(field, axis=1)
        row = int(np.argmax(norms)) + 1
        record(0.0, x, k_val, row, float(norms[row - 1]), 1.0)
        return finish("degenerate")

    row = select_row(field, current=None)
    sign = 1.0
    velocity = sign * field[row - 1]
    s = 0.0
    record(s, x, k_val, row, float(np.linalg.norm(field[row - 1])), sign)

    def stage_velocity(y: np.ndarray) -> np.ndarray:
        try:
            f = flow_field(mapping, y)
        except GuardViolation as exc:
            raise StepFailure(f"integrator stage left the map's domain: {exc}") from exc
        return sign * f[row - 1]

    while s < max_len - 1e-14:
        step = min(ds, max_len - s)
        k1 = stage_velocity(x)
        k2 = stage_velocity(x + 0.5 * step * k1)
        k3 = stage_velocity(x + 0.5 * step * k2)
        k4 = stage_velocity(x + step * k3)
        x_new = x + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        if domain(x_new) >= 0.0:
            # bisect the chord for the boundary crossing
            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if domain(x + mid * (x_new - x)) < 0.0:
                    lo = mid
                else:
                    hi = mid
                if (hi - lo) * float(np.linalg.norm(x_new - x)) < 1e-10:
                    break
            x_hit = x + lo * (x_new - x)
            jet = mapping.jet(x_hit)
            k_val = float(trace_dilation(jet.J))
            field = _field_from_jet(jet)
            record(s + lo * step, x_hit, k_val, row,
                   float(np.linalg.norm(field[row - 1])), sign)
            return finish("boundary")

        s += step
        x = x_new
        jet = mapping.jet(x)
        k_val = float(trace_dilation(jet.J))
        field = _field_from_jet(jet)
        if degenerate(field, k_val):
            norms = np.linalg.norm(field, axis=1)
            record(s, x, k_val, row, float(norms[row - 1]), sign)
            return finish("degenerate")

        new_row = select_row(field, current=row)
        if new_row != row:
            row = new_row
            # forward orientation: angle with the previous velocity <= 90 degrees
            sign = 1.0 if float(np.dot(field[row - 1], velocity)) >= 0.0 else -1.0
        velocity = sign * field[row - 1]
        record(s, x, k_val, row, float(np.linalg.norm(field[row - 1])), sign)

    return finish("maxLength")


def du_recovery_check(mapping, trajectory: FlowTrajectory, row_index: int) -> float:
    """Residual of the differential-drift identity along a fixed-row path.

    Compares the drift of Jacobian row i between the endpoints with the
    trapezoidal integral of K grad K along the path, returning the max
    over columns of the absolute mismatch. Insists the trajectory never
    switched rows.
    """
    if not np.all(trajectory.row == row_index):
        raise RowSwitched("trajectory changed active row; identity needs a fixed row")
    i = int(row_index) - 1
    jets = [mapping.jet(x) for x in trajectory.x]
    integrand = np.array(
        [float(trace_dilation(j.J)) * dilation_gradient(j) for j in jets]
    )
    integral = np.trapezoid(integrand, trajectory.s, axis=0)
    drift = jets[-1].J[i] - jets[0].J[i]
    return float(np.max(np.abs(drift - integral)))


def path_integral_residual(mapping, trajectory: FlowTrajectory, row_index: int) -> float:
    """Fundamental-theorem check of the row-i differential drift.

    Integrates the chain-rule derivative of Jacobian row i along the
    recorded velocity and compares with the endpoint drift; the residual
    shrinks at second order in the step. Diagnostic companion to
    du_recovery_check with an integrand valid for every smooth map.
    """
    if not np.all(trajectory.row == row_index):
        raise RowSwitched("trajectory changed active row")
    i = int(row_index) - 1
    rows = []
    for x, sign in zip(trajectory.x, trajectory.sign):
        jet = mapping.jet(x)
        vel = sign * _field_from_jet(jet)[i]
        rows.append(np.einsum("lj,l->j", jet.H[i], vel))
    integrand = np.array(rows)
    integral = np.trapezoid(integrand, trajectory.s, axis=0)
    drift = mapping.jet(trajectory.x[-1]).J[i] - mapping.jet(trajectory.x[0]).J[i]
    return float(np.max(np.abs(drift - integral)))
