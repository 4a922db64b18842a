"""Explicit finite-difference gradient flow of the dilation energy.

Discretizes maps on uniform rectangular grids with Dirichlet boundary
data and advances interior nodes by the non-divergence form of the
finite-p operator. Monitors enforce energy monotonicity per accepted
step and a determinant floor at half the initial minimum; violations
halve the step or halt the run. A frozen-coefficient (picard) mode
re-integrates the horizon against the previous pass's coefficient
history instead of adapting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DeterminantCollapse, NonFiniteValue, NonPositiveDeterminant
from .operators import flux_linearization

DEFAULT_SAFETY = 0.2
ENERGY_TOL_SCALE = 1e-12
MAX_CONSECUTIVE_VIOLATIONS = 5


@dataclass
class GridField:
    """Uniform-grid samples of a map with fixed boundary nodes.

    values has one length-n vector per node, shape (*shape, n); the
    boundary mask marks nodes held fixed by the stepper; det_cache holds
    the per-node determinant of the current difference Jacobian.
    """

    values: np.ndarray
    h: float
    origin: np.ndarray
    boundary_mask: np.ndarray
    det_cache: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    @property
    def shape(self) -> tuple:
        return self.values.shape[:-1]

    def node_coordinates(self) -> np.ndarray:
        axes = [self.origin[a] + self.h * np.arange(m) for a, m in enumerate(self.shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(
            values=values,
            h=self.h,
            origin=self.origin,
            boundary_mask=self.boundary_mask,
            det_cache=_det_field(values, self.h),
        )


def _jacobian_field(values: np.ndarray, h: float) -> np.ndarray:
    """J[..., i, a] = d_a u^i by central differences, one-sided at edges."""
    n = values.shape[-1]
    grads = [np.gradient(values, h, axis=a, edge_order=2) for a in range(n)]
    return np.stack(grads, axis=-1)


def _det_field(values: np.ndarray, h: float) -> np.ndarray:
    return np.linalg.det(_jacobian_field(values, h))


def make_grid(mapping, shape, h: float, origin=None) -> GridField:
    """Sample a map's values on a uniform grid with the given node counts."""
    shape = tuple(int(m) for m in shape)
    n = mapping.n
    if len(shape) != n:
        raise ValueError("grid rank must match the map dimension")
    if min(shape) < 4:
        raise ValueError("need at least 4 nodes per axis")
    origin = np.zeros(n) if origin is None else np.asarray(origin, dtype=float)
    values = np.empty(shape + (n,))
    for idx in np.ndindex(shape):
        x = origin + h * np.asarray(idx, dtype=float)
        values[idx] = mapping.value(x)
    mask = np.zeros(shape, dtype=bool)
    for a in range(n):
        sl_lo = [slice(None)] * n
        sl_lo[a] = 0
        mask[tuple(sl_lo)] = True
        sl_hi = [slice(None)] * n
        sl_hi[a] = shape[a] - 1
        mask[tuple(sl_hi)] = True
    return GridField(
        values=values,
        h=h,
        origin=origin,
        boundary_mask=mask,
        det_cache=_det_field(values, h),
    )


def _interior_view(values: np.ndarray, offsets) -> np.ndarray:
    """Values at interior nodes displaced by the given per-axis offsets."""
    shape = values.shape[:-1]
    sl = tuple(slice(1 + o, m - 1 + o) for o, m in zip(offsets, shape))
    return values[sl]


def _interior_jacobian(values: np.ndarray, h: float) -> np.ndarray:
    n = values.shape[-1]
    cols = []
    for a in range(n):
        off_p = [0] * n
        off_p[a] = 1
        off_m = [0] * n
        off_m[a] = -1
        cols.append((_interior_view(values, off_p) - _interior_view(values, off_m)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def _interior_hessian(values: np.ndarray, h: float) -> np.ndarray:
    n = values.shape[-1]
    inner_shape = tuple(m - 2 for m in values.shape[:-1])
    hess = np.empty(inner_shape + (n, n, n))
    center = _interior_view(values, [0] * n)
    for a in range(n):
        for b in range(a, n):
            if a == b:
                off = [0] * n
                off[a] = 1
                plus = _interior_view(values, off)
                off[a] = -1
                minus = _interior_view(values, off)
                arr = (plus - 2.0 * center + minus) / h**2
            else:
                off = [0] * n
                off[a], off[b] = 1, 1
                pp = _interior_view(values, off)
                off[a], off[b] = 1, -1
                pm = _interior_view(values, off)
                off[a], off[b] = -1, 1
                mp = _interior_view(values, off)
                off[a], off[b] = -1, -1
                mm = _interior_view(values, off)
                arr = (pp - pm - mp + mm) / (4.0 * h**2)
            hess[..., :, a, b] = arr
            if b != a:
                hess[..., :, b, a] = arr
    return hess


def _full_hessian(values: np.ndarray, h: float) -> np.ndarray:
    """Hessian at every node; one-sided second-order stencils on the edges."""
    n = values.shape[-1]
    shape = values.shape[:-1]
    grads = [np.gradient(values, h, axis=a, edge_order=2) for a in range(n)]
    hess = np.empty(shape + (n, n, n))
    for a in range(n):
        for b in range(n):
            if a == b:
                v = np.moveaxis(values, a, 0)
                d2 = np.empty_like(v)
                d2[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
                d2[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h**2
                d2[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h**2
                hess[..., :, a, a] = np.moveaxis(d2, 0, a)
            else:
                hess[..., :, a, b] = np.gradient(grads[a], h, axis=b, edge_order=2)
    return 0.5 * (hess + np.swapaxes(hess, -1, -2))


def _checked_det_field(det: np.ndarray) -> None:
    if not np.all(det > 0.0):
        raise NonPositiveDeterminant(
            f"grid Jacobian determinant must be positive (min {float(np.min(det)):.6e})"
        )


def energy(grid: GridField, p: float) -> float:
    """Mean of K^{np} over the box by trapezoidal quadrature."""
    n = grid.n
    jac = _jacobian_field(grid.values, grid.h)
    det = np.linalg.det(jac)
    _checked_det_field(det)
    nsq = np.sum(jac * jac, axis=(-2, -1))
    ksq = nsq / det ** (2.0 / n)
    integrand = ksq ** (n * p / 2.0)
    total = integrand
    for _ in range(n):
        total = np.trapezoid(total, dx=grid.h, axis=-1)
    volume = float(np.prod([(m - 1) * grid.h for m in grid.shape]))
    return float(total) / volume


def compatibility_check(grid: GridField, p: float) -> float:
    """Largest boundary-node magnitude of the non-divergence operator.

    Initial data compatible with its own Dirichlet values makes this
    small; the value converges to the pointwise operator norm on the
    boundary at second order in h.
    """
    jac = _jacobian_field(grid.values, grid.h)
    det = np.linalg.det(jac)
    _checked_det_field(det)
    hess = _full_hessian(grid.values, grid.h)
    a4 = flux_linearization(jac, p)
    resid = np.einsum("...ikjl,...kjl->...i", a4, hess)
    return float(np.max(np.abs(resid[grid.boundary_mask])))


def interior_operator(grid: GridField, p: float) -> np.ndarray:
    """Non-divergence operator at interior nodes, shape (*interior, n)."""
    jac = _interior_jacobian(grid.values, grid.h)
    det = np.linalg.det(jac)
    _checked_det_field(det)
    hess = _interior_hessian(grid.values, grid.h)
    a4 = flux_linearization(jac, p)
    return np.einsum("...ikjl,...kjl->...i", a4, hess)


def dtmax(grid: GridField, p: float, safety: float = DEFAULT_SAFETY) -> float:
    """Stable explicit step estimate safety * h^2 / Lambda.

    Lambda is the grid maximum over nodes and output components of the
    absolute coefficient mass of the linearized flux, an upper bound of
    the same h^-2 scaling the ellipticity sandwich provides. Doubling h
    quadruples the bound; raising p shrinks it through the coefficient
    growth.
    """
    jac = _jacobian_field(grid.values, grid.h)
    det = np.linalg.det(jac)
    _checked_det_field(det)
    a4 = flux_linearization(jac, p)
    lam = float(np.max(np.sum(np.abs(a4), axis=(-3, -2, -1))))
    return safety * grid.h**2 / lam


def explicit_step(grid: GridField, p: float, dt: float,
                  det_floor: float | None = None) -> GridField:
    """One forward-Euler update of the interior nodes.

    Boundary nodes never move. If the stepped field's determinant drops
    below det_floor anywhere (default: half the current minimum), the
    step is rejected by raising DeterminantCollapse.
    """
    if det_floor is None:
        det_floor = 0.5 * float(np.min(grid.det_cache))
    update = interior_operator(grid, p)
    new_values = grid.values.copy()
    core = tuple(slice(1, -1) for _ in grid.shape)
    new_values[core] += dt * update
    new_det = _det_field(new_values, grid.h)
    if not np.all(np.isfinite(new_values)):
        raise NonFiniteValue("explicit step produced non-finite values")
    if float(np.min(new_det)) < det_floor:
        raise DeterminantCollapse(
            f"step drove min det to {float(np.min(new_det)):.6e} < floor {det_floor:.6e}"
        )
    return GridField(
        values=new_values,
        h=grid.h,
        origin=grid.origin,
        boundary_mask=grid.boundary_mask,
        det_cache=new_det,
    )


@dataclass
class FlowRunStats:
    """Per-step monitor series of one flow run.

    Arrays share indexing: row k describes the state after k accepted
    steps (row 0 is the initial state, with dt 0). halt_reason is None
    for a run that reached its horizon.
    """

    times: np.ndarray
    energy: np.ndarray
    min_det: np.ndarray
    dt_history: np.ndarray
    halt_reason: str | None
    compat_residual: float
    violations: int
    final_grid: GridField = field(repr=False)

    def write_csv(self, path) -> None:
        lines = ["step,time,energy,min_det,dt"]
        for k in range(self.times.size):
            lines.append(
                f"{k},{float(self.times[k])!r},{float(self.energy[k])!r},"
                f"{float(self.min_det[k])!r},{float(self.dt_history[k])!r}"
            )
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def run_flow(grid: GridField, p: float, t_final: float, mode: str = "explicit",
             safety: float = DEFAULT_SAFETY, outer: int = 3) -> FlowRunStats:
    """Integrate the flow to the horizon with monitors.

    explicit mode advances with the stability-bounded step, halving it
    whenever the energy monitor trips; five consecutive violations halt
    the run, as do determinant collapse and non-finite values. picard
    mode re-runs the horizon `outer` times at fixed step, evaluating
    coefficients on the previous pass's saved states, and reports the
    monitors of the final pass.
    """
    if mode not in ("explicit", "picard"):
        raise ValueError(f"unknown mode {mode!r}")
    compat = compatibility_check(grid, p)
    det_floor = 0.5 * float(np.min(grid.det_cache))
    e0 = energy(grid, p)
    tol = ENERGY_TOL_SCALE * (1.0 + abs(e0))

    times = [0.0]
    energies = [e0]
    min_dets = [float(np.min(grid.det_cache))]
    dts = [0.0]
    violations = 0
    halt = None

    def stats(final: GridField) -> FlowRunStats:
        return FlowRunStats(
            times=np.array(times),
            energy=np.array(energies),
            min_det=np.array(min_dets),
            dt_history=np.array(dts),
            halt_reason=halt,
            compat_residual=compat,
            violations=violations,
            final_grid=final,
        )

    if mode == "picard":
        return _run_picard(grid, p, t_final, safety, outer, compat)

    dt = dtmax(grid, p, safety)
    t = 0.0
    consecutive = 0
    e_prev = e0
    while t < t_final - 1e-15:
        step_dt = min(dt, t_final - t)
        try:
            candidate = explicit_step(grid, p, step_dt, det_floor)
        except DeterminantCollapse:
            halt = "determinant_collapse"
            break
        except NonFiniteValue:
            halt = "non_finite"
            break
        e_new = energy(candidate, p)
        if e_new > e_prev + tol:
            violations += 1
            consecutive += 1
            dt *= 0.5
            if consecutive >= MAX_CONSECUTIVE_VIOLATIONS:
                halt = "unstable"
                break
            continue
        grid = candidate
        t += step_dt
        e_prev = e_new
        consecutive = 0
        times.append(t)
        energies.append(e_new)
        min_dets.append(float(np.min(grid.det_cache)))
        dts.append(step_dt)
    return stats(grid)


def _run_picard(grid: GridField, p: float, t_final: float, safety: float,
                outer: int, compat: float) -> FlowRunStats:
    """Frozen-coefficient passes over the horizon at fixed step."""
    det_floor = 0.5 * float(np.min(grid.det_cache))
    e0 = energy(grid, p)
    tol = ENERGY_TOL_SCALE * (1.0 + abs(e0))
    dt = dtmax(grid, p, safety)
    n_steps = max(1, int(np.ceil(t_final / dt)))
    step_dts = [min(dt, t_final - k * dt) for k in range(n_steps)]

    core = tuple(slice(1, -1) for _ in grid.shape)
    history = [grid.values] * (n_steps + 1)  # pass zero freezes at u0
    halt = None
    violations = 0
    times, energies, min_dets, dts = [], [], [], []

    current = grid
    for _ in range(max(1, int(outer))):
        current = grid
        new_history = [grid.values]
        times = [0.0]
        energies = [e0]
        min_dets = [float(np.min(grid.det_cache))]
        dts = [0.0]
        halt = None
        t = 0.0
        e_prev = e0
        consecutive = 0
        for k, step_dt in enumerate(step_dts):
            frozen = current.with_values(history[k])
            coeff_jac = _interior_jacobian(frozen.values, grid.h)
            _checked_det_field(np.linalg.det(coeff_jac))
            a4 = flux_linearization(coeff_jac, p)
            hess = _interior_hessian(current.values, grid.h)
            update = np.einsum("...ikjl,...kjl->...i", a4, hess)
            new_values = current.values.copy()
            new_values[core] += step_dt * update
            if not np.all(np.isfinite(new_values)):
                halt = "non_finite"
                break
            new_det = _det_field(new_values, grid.h)
            if float(np.min(new_det)) < det_floor:
                halt = "determinant_collapse"
                break
            current = GridField(
                values=new_values,
                h=grid.h,
                origin=grid.origin,
                boundary_mask=grid.boundary_mask,
                det_cache=new_det,
            )
            t += step_dt
            e_new = energy(current, p)
            if e_new > e_prev + tol:
                violations += 1
                consecutive += 1
                if consecutive >= MAX_CONSECUTIVE_VIOLATIONS:
                    halt = "unstable"
                    break
            else:
                consecutive = 0
            e_prev = e_new
            new_history.append(new_values)
            times.append(t)
            energies.append(e_new)
            min_dets.append(float(np.min(new_det)))
            dts.append(step_dt)
        if halt is not None:
            break
        history = new_history

    return FlowRunStats(
        times=np.array(times),
        energy=np.array(energies),
        min_det=np.array(min_dets),
        dt_history=np.array(dts),
        halt_reason=halt,
        compat_residual=compat,
        violations=violations,
        final_grid=current,
    )


# ---------------------------------------------------------------------------
# snapshot io

def write_snapshot(grid: GridField, path) -> None:
    """Flat binary dump: int64 n, int64 node counts, float64 h, node values.

    All fields little-endian; values row-major with the component axis
    last.
    """
    with open(path, "wb") as fh:
        fh.write(np.array([grid.n], dtype="<i8").tobytes())
        fh.write(np.array(grid.shape, dtype="<i8").tobytes())
        fh.write(np.array([grid.h], dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(grid.values, dtype="<f8").tobytes())


def read_snapshot(path) -> tuple[np.ndarray, float]:
    """Inverse of write_snapshot: returns (values, h)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    n = int(np.frombuffer(raw, dtype="<i8", count=1)[0])
    shape = tuple(int(m) for m in np.frombuffer(raw, dtype="<i8", count=n, offset=8))
    h = float(np.frombuffer(raw, dtype="<f8", count=1, offset=8 * (1 + n))[0])
    values = np.frombuffer(raw, dtype="<f8", offset=8 * (2 + n)).reshape(shape + (n,))
    return values.copy(), h
