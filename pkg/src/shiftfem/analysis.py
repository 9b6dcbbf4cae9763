"""Error norms, convergence orders, interpolation, and stability diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_triangular

from .assembly import ExactSolution
from .errors import (DimensionMismatch, MissingExact, NonDyadicSequence,
                     NotSPD, TooLargeForDense)
from .mesh import INTERIOR, TriMesh
from .quadrature import rule_for_degree, triangle_area
from .spaces import (DofMap, LocalBasis, barycentric_gradients,
                     eval_basis_bary, eval_basis_bary_grad, lagrange_layout)

DENSE_LIMIT = 5000

CSV_HEADER = "param,h,grad_err,grad_order,l2_err,l2_order,max_err,max_order,alpha_h,kt_dev"


@dataclass(frozen=True)
class ErrorReport:
    grad_err: float
    l2_err: float
    max_nodal_err: float
    h: float
    param: int

    def __post_init__(self):
        for name in ("grad_err", "l2_err", "max_nodal_err", "h"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")


@dataclass(frozen=True)
class ConvergenceTable:
    reports: tuple[ErrorReport, ...]
    grad_orders: tuple[float, ...]
    l2_orders: tuple[float, ...]
    max_orders: tuple[float, ...]


def _full_coefficients(dofmap: DofMap, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape == (dofmap.n_nodes,):
        return x
    if x.shape == (dofmap.n_unknowns,):
        return dofmap.full_vector(x)
    raise DimensionMismatch(
        f"solution has shape {x.shape}; expected ({dofmap.n_unknowns},) or ({dofmap.n_nodes},)")


def error_norms(mesh: TriMesh, dofmap: DofMap, local_bases: Sequence[LocalBasis],
                x: np.ndarray, exact: ExactSolution | None,
                rule=None, param: int = 0) -> ErrorReport:
    """Gradient and L2 error over the mesh polygon plus the unknown-node max.

    ``x`` may be the reduced unknown vector or the full nodal vector. The
    nodal maximum uses the coefficients directly (they are nodal values),
    over unknown nodes only: constrained nodes sit on the true boundary
    where the imposed datum is exact.
    """
    if exact is None:
        raise MissingExact("error norms require a manufactured solution")
    full = _full_coefficients(dofmap, x)
    k = {6: 2, 10: 3}[dofmap.element_to_global.shape[1]]
    if rule is None:
        rule = rule_for_degree(2 * k + 4)
    dphi_bary = eval_basis_bary_grad(k, rule.points)
    phi = eval_basis_bary(k, rule.points)
    g2 = l2 = 0.0
    for t in range(mesh.num_triangles):
        tri = mesh.triangle_coords(t)
        area = abs(triangle_area(tri))
        a = local_bases[t].coeffs @ full[dofmap.element_to_global[t]]
        pts = rule.physical_points(tri)
        gh = np.einsum("qjd,j->qd", dphi_bary @ barycentric_gradients(tri), a)
        dg = gh - exact.grad(pts[:, 0], pts[:, 1])
        dv = phi @ a - exact.value(pts[:, 0], pts[:, 1])
        g2 += area * float(rule.weights @ np.einsum("qd,qd->q", dg, dg))
        l2 += area * float(rule.weights @ (dv * dv))
    nodal = np.abs(full - exact.value(dofmap.node_coords[:, 0], dofmap.node_coords[:, 1]))
    max_err = float(nodal[~dofmap.dirichlet_mask].max()) if dofmap.n_unknowns else 0.0
    return ErrorReport(grad_err=math.sqrt(g2), l2_err=math.sqrt(l2),
                       max_nodal_err=max_err,
                       h=float(mesh.h_per_element.max()), param=int(param))


# Errors at the double-precision floor carry no rate information.
ORDER_FLOOR = 1e-13


def _pair_order(coarse: float, fine: float) -> float:
    if coarse <= ORDER_FLOOR or fine <= ORDER_FLOOR:
        return math.nan
    if not (math.isfinite(coarse) and math.isfinite(fine)):
        return math.nan
    return math.log2(coarse / fine)


def convergence_orders(reports: Sequence[ErrorReport]) -> ConvergenceTable:
    """Pairwise log2 error ratios between consecutive dyadic refinements."""
    if len(reports) < 2:
        raise NonDyadicSequence("need at least two reports to compute orders")
    params = [r.param for r in reports]
    for a, b in zip(params, params[1:]):
        if b != 2 * a:
            raise NonDyadicSequence(f"parameters {params} are not consecutive doublings")
    return ConvergenceTable(
        reports=tuple(reports),
        grad_orders=tuple(_pair_order(a.grad_err, b.grad_err)
                          for a, b in zip(reports, reports[1:])),
        l2_orders=tuple(_pair_order(a.l2_err, b.l2_err)
                        for a, b in zip(reports, reports[1:])),
        max_orders=tuple(_pair_order(a.max_nodal_err, b.max_nodal_err)
                         for a, b in zip(reports, reports[1:])),
    )


def interpolate_Ih(u: Callable, mesh: TriMesh, dofmap: DofMap,
                   local_bases: Sequence[LocalBasis] | None = None) -> np.ndarray:
    """Trial-space interpolant: coefficient = u at every global node.

    Nodes of curved-edge elements live on the true boundary, so the
    interpolant matches u there exactly.
    """
    return np.asarray(u(dofmap.node_coords[:, 0], dofmap.node_coords[:, 1]),
                      dtype=float)


def chord_node_gap(mesh: TriMesh, dofmap: DofMap, u: Callable, k: int) -> float:
    """Max |u(M) - u(P)| over relocated nodes: M the straight-edge lattice
    position, P its boundary replacement carrying the imposed value.

    This is the nodal error attributed to the lattice position of a
    constrained dof; it decays as O(h^2) while unknown-node errors
    superconverge, so the two diagnostics are reported separately.
    """
    gap = 0.0
    for t in range(mesh.num_triangles):
        if mesh.element_class is not None and mesh.element_class[t] == INTERIOR:
            continue
        tri = mesh.triangle_coords(t)
        plain = lagrange_layout(k, tri)
        shifted = dofmap.node_coords[dofmap.element_to_global[t]]
        moved = np.linalg.norm(shifted - plain, axis=1) > 0.0
        for loc in np.nonzero(moved)[0]:
            um = float(u(plain[loc, 0], plain[loc, 1]))
            up = float(u(shifted[loc, 0], shifted[loc, 1]))
            gap = max(gap, abs(um - up))
    return gap


@dataclass(frozen=True)
class KtReport:
    max_dev: float
    dev_vs_h: tuple[tuple[float, float], ...]


def kt_perturbation_report(local_bases: Sequence[LocalBasis]) -> KtReport:
    """Max node-shift system deviation and (h_T, deviation) pairs for regression."""
    pairs = []
    max_dev = 0.0
    for lb in local_bases:
        max_dev = max(max_dev, lb.kt_deviation)
        if lb.kt_deviation > 0.0:
            tri = lb.tri
            h = max(float(np.linalg.norm(tri[i] - tri[(i + 1) % 3])) for i in range(3))
            pairs.append((h, lb.kt_deviation))
    return KtReport(max_dev=max_dev, dev_vs_h=tuple(pairs))


def inf_sup_estimate(A, G_test, G_trial) -> float:
    """Smallest singular value of the Gram-normalized system matrix.

    Equals the discrete inf over trial functions of the sup over test
    functions of a_h(w, v) / (|w|_1 |v|_1).
    """
    n = A.shape[0]
    if n > DENSE_LIMIT:
        raise TooLargeForDense(f"{n} unknowns exceed the dense-SVD guard {DENSE_LIMIT}")
    Ad = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    if Ad.shape != (n, n) or G_test.shape != (n, n) or G_trial.shape != (n, n):
        raise DimensionMismatch("A and both Gram matrices must be square and same size")
    try:
        Lt = np.linalg.cholesky(G_test.toarray() if sp.issparse(G_test) else np.asarray(G_test))
        Lw = np.linalg.cholesky(G_trial.toarray() if sp.issparse(G_trial) else np.asarray(G_trial))
    except np.linalg.LinAlgError as exc:
        raise NotSPD(f"gram factorization failed: {exc}") from exc
    M = solve_triangular(Lt, Ad, lower=True)
    N = solve_triangular(Lw, M.T, lower=True).T
    return float(np.linalg.svd(N, compute_uv=False).min())


def _csv_num(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def table_to_csv(table: ConvergenceTable,
                 alpha_h: Sequence[float | None] | None = None,
                 kt_dev: Sequence[float | None] | None = None) -> str:
    """Serialize with one row per mesh; first-row orders are empty fields."""
    n = len(table.reports)
    alpha_h = list(alpha_h) if alpha_h is not None else [None] * n
    kt_dev = list(kt_dev) if kt_dev is not None else [None] * n
    if len(alpha_h) != n or len(kt_dev) != n:
        raise DimensionMismatch("alpha_h/kt_dev must have one entry per report")
    lines = [CSV_HEADER]
    for i, r in enumerate(table.reports):
        orders = ["", "", ""] if i == 0 else [
            _csv_num(table.grad_orders[i - 1]),
            _csv_num(table.l2_orders[i - 1]),
            _csv_num(table.max_orders[i - 1]),
        ]
        lines.append(",".join([
            str(r.param), _csv_num(r.h),
            _csv_num(r.grad_err), orders[0],
            _csv_num(r.l2_err), orders[1],
            _csv_num(r.max_nodal_err), orders[2],
            _csv_num(alpha_h[i]), _csv_num(kt_dev[i]),
        ]))
    return "\n".join(lines) + "\n"
