"""Conic program representation and solve contract.

A :class:`ConicProblem` holds named real variable blocks, a linear objective
and a list of affine constraints ``A x + b ∈ K``. Constraint coefficients are
kept as sparse triplets and assembled lazily into ``scipy.sparse`` matrices
once every variable is known. :func:`solve` hands the assembled program to
``cvxpy`` (Clarabel, with SCS as fallback) and checks the returned primal point
with an independent cone-membership verifier.
"""

import contextlib
import itertools
import logging
from contextvars import ContextVar
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import cvxpy as cp
import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

VERIFY_TOL = 1e-7
GAP_TOL = 1e-8
DUAL_TOL = 1e-8
Coefficients = Union[np.ndarray, sp.spmatrix, float]


class ConeKind(Enum):
    """Supported cone families."""

    ZERO = "zero"
    NONNEGATIVE = "nonnegative"
    SECOND_ORDER = "second_order"
    POWER3 = "power3"
    PSD = "psd"


@dataclass(frozen=True)
class Cone:
    """One cone.

    ``dim`` is the number of affine rows, except for PSD cones where it is the
    matrix side ``n`` and the rows hold ``vec(M)`` in column-major order.
    """

    kind: ConeKind
    dim: int
    exponent: Optional[float] = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("Cone dimension must be positive")
        if self.kind is ConeKind.POWER3:
            if self.dim != 3:
                raise ValueError("Power cone has exactly three rows")
            if self.exponent is None or not 0.0 < self.exponent < 1.0:
                raise ValueError("Power cone exponent must lie in (0, 1)")
        elif self.exponent is not None:
            raise ValueError("Only power cones take an exponent")
        if self.kind is ConeKind.SECOND_ORDER and self.dim < 2:
            raise ValueError("Second-order cone needs at least two rows")

    @property
    def size(self) -> int:
        """Number of affine rows."""
        return self.dim * self.dim if self.kind is ConeKind.PSD else self.dim

    @classmethod
    def zero(cls, dim: int) -> "Cone":
        return cls(ConeKind.ZERO, dim)

    @classmethod
    def nonnegative(cls, dim: int) -> "Cone":
        return cls(ConeKind.NONNEGATIVE, dim)

    @classmethod
    def second_order(cls, dim: int) -> "Cone":
        return cls(ConeKind.SECOND_ORDER, dim)

    @classmethod
    def power3(cls, exponent: float) -> "Cone":
        return cls(ConeKind.POWER3, 3, exponent)

    @classmethod
    def psd(cls, n: int) -> "Cone":
        return cls(ConeKind.PSD, n)


@dataclass(frozen=True)
class VariableBlock:
    """Named slice of the real variable vector."""

    name: str
    start: int
    size: int
    meta: Mapping[str, Any] = field(default_factory=dict)

    @property
    def slice(self) -> slice:
        return slice(self.start, self.start + self.size)


# (affine matrix, offset, cone) of one assembled constraint
_AssembledRow = Tuple[sp.csr_matrix, np.ndarray, Cone]


@dataclass
class _Constraint:
    rows: List[np.ndarray]
    cols: List[np.ndarray]
    vals: List[np.ndarray]
    offset: np.ndarray
    cone: Cone
    label: str


def _triplets(coeffs: Coefficients, m: int, size: int) -> sp.coo_matrix:
    if np.isscalar(coeffs):
        if m != size:
            raise ValueError("Scalar coefficient needs a square block")
        return sp.coo_matrix(float(coeffs) * sp.identity(size))
    matrix = sp.coo_matrix(coeffs)
    # narrower blocks address the leading columns only
    if matrix.shape[0] != m or matrix.shape[1] > size:
        raise ValueError(f"Coefficient block has shape {matrix.shape}, expected {(m, size)}")
    if matrix.shape[1] < size:
        matrix = sp.coo_matrix((matrix.data, (matrix.row, matrix.col)), shape=(m, size))
    return matrix


class ConicProblem:
    """Minimize ``c^T x + c0`` subject to ``A_k x + b_k ∈ K_k``."""

    def __init__(self, name: str = "problem"):
        self.name = name
        self.annotations: Dict[str, VariableBlock] = {}
        self.n_vars = 0
        self._objective: Dict[str, np.ndarray] = {}
        self.objective_constant = 0.0
        self._constraints: List[_Constraint] = []
        self._assembled: Optional[Tuple[np.ndarray, List[_AssembledRow]]] = None

    def add_variable(self, name: str, size: int, **meta: Any) -> VariableBlock:
        """Append a block of ``size`` real variables."""
        if name in self.annotations:
            raise ValueError(f"Variable '{name}' already defined")
        if size < 1:
            raise ValueError("Variable block must be non-empty")
        block = VariableBlock(name, self.n_vars, size, dict(meta))
        self.annotations[name] = block
        self.n_vars += size
        self._assembled = None
        return block

    def variable(self, name: str) -> VariableBlock:
        """Look up a variable block."""
        return self.annotations[name]

    def set_objective(self, terms: Mapping[str, Coefficients], constant: float = 0.0) -> None:
        """Set the linear objective from per-block coefficient vectors."""
        objective = {}
        for name, coeffs in terms.items():
            block = self.annotations[name]
            vec = np.broadcast_to(np.asarray(coeffs, dtype=float), (block.size,)).copy()
            objective[name] = vec
        self._objective = objective
        self.objective_constant = float(constant)
        self._assembled = None

    def add_constraint(
        self,
        terms: Mapping[str, Coefficients],
        offset: Union[Sequence[float], np.ndarray, float],
        cone: Cone,
        label: str = "",
    ) -> None:
        """Add ``Σ_blocks C_block x_block + offset ∈ cone``.

        Args:
            terms: Coefficient matrix (rows x block size) per variable block
            offset: Constant vector (rows)
            cone: Target cone
            label: Optional name used in logs and dumps
        """
        m = cone.size
        offset_vec = np.broadcast_to(np.asarray(offset, dtype=float), (m,)).copy()
        rows, cols, vals = [], [], []
        for name, coeffs in terms.items():
            block = self.annotations[name]
            matrix = _triplets(coeffs, m, block.size)
            rows.append(matrix.row.astype(np.int64))
            cols.append(matrix.col.astype(np.int64) + block.start)
            vals.append(matrix.data.astype(float))
        self._constraints.append(_Constraint(rows, cols, vals, offset_vec, cone, label))
        self._assembled = None

    def add_rows(self, rows: Sequence["ConstraintRows"]) -> None:
        """Add constraints produced by helper builders."""
        for r in rows:
            self.add_constraint(r.terms, r.offset, r.cone, r.label)

    @property
    def constraints(self) -> List[_AssembledRow]:
        """Assembled ``(A_k, b_k, K_k)`` triples."""
        return self.assemble()[1]

    @property
    def objective(self) -> np.ndarray:
        """Assembled objective vector ``c``."""
        return self.assemble()[0]

    def assemble(self) -> Tuple[np.ndarray, List[_AssembledRow]]:
        """Build sparse matrices for the current variable layout."""
        if self._assembled is not None:
            return self._assembled
        c = np.zeros(self.n_vars)
        for name, vec in self._objective.items():
            c[self.annotations[name].slice] = vec
        assembled = []
        for con in self._constraints:
            m = con.cone.size
            if con.rows:
                matrix = sp.csr_matrix(
                    (
                        np.concatenate(con.vals),
                        (np.concatenate(con.rows), np.concatenate(con.cols)),
                    ),
                    shape=(m, self.n_vars),
                )
            else:
                matrix = sp.csr_matrix((m, self.n_vars))
            assembled.append((matrix, con.offset, con.cone))
        self._assembled = (c, assembled)
        return self._assembled

    def value(self, x: np.ndarray, name: str) -> np.ndarray:
        """Slice a primal vector by block name."""
        return np.asarray(x)[self.annotations[name].slice]


@dataclass(frozen=True)
class ConstraintRows:
    """Constraint description returned by helper builders."""

    terms: Mapping[str, Coefficients]
    offset: np.ndarray
    cone: Cone
    label: str = ""


class ConicStatus(Enum):
    """Outcome of a conic solve."""

    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_LIMIT = "numerical_limit"


@dataclass(frozen=True)
class ConicSolution:
    """Result of :func:`solve`.

    Attributes:
        status: Solve outcome
        x: Primal vector (None unless a point was returned)
        duals: One dual vector per constraint, in insertion order
        objective: ``c^T x + c0``
        primal_residual: Largest cone violation of ``x`` (independent check)
        dual_residual: Relative stationarity residual ``‖c - Σ A_k^T y_k‖``
        gap: Relative duality gap
        solver: Name of the backend that produced the point
    """

    status: ConicStatus
    x: Optional[np.ndarray]
    duals: Tuple[np.ndarray, ...] = ()
    objective: float = float("nan")
    primal_residual: float = float("inf")
    dual_residual: float = float("nan")
    gap: float = float("nan")
    solver: str = ""

    @property
    def is_optimal(self) -> bool:
        return self.status is ConicStatus.OPTIMAL

    def usable(self, tol: float = 1e-5) -> bool:
        """Whether ``x`` can be used as an (approximately) feasible point."""
        if self.x is None:
            return False
        if self.is_optimal:
            return True
        return self.status is ConicStatus.NUMERICAL_LIMIT and self.primal_residual <= tol


def cone_violation(cone: Cone, values: np.ndarray) -> float:
    """Distance-like violation of ``values ∈ cone`` (0 when inside)."""
    v = np.asarray(values, dtype=float)
    if cone.kind is ConeKind.ZERO:
        return float(np.max(np.abs(v)))
    if cone.kind is ConeKind.NONNEGATIVE:
        return float(max(0.0, -np.min(v)))
    if cone.kind is ConeKind.SECOND_ORDER:
        return float(max(0.0, np.linalg.norm(v[1:]) - v[0]))
    if cone.kind is ConeKind.POWER3:
        x, y, z = v
        alpha = float(cone.exponent)
        mean = max(x, 0.0) ** alpha * max(y, 0.0) ** (1.0 - alpha)
        return float(max(0.0, -x, -y, abs(z) - mean))
    matrix = v.reshape(cone.dim, cone.dim, order="F")
    matrix = 0.5 * (matrix + matrix.T)
    return float(max(0.0, -np.linalg.eigvalsh(matrix)[0]))


def primal_residual(problem: ConicProblem, x: np.ndarray) -> float:
    """Largest cone violation over all constraints."""
    worst = 0.0
    for matrix, offset, cone in problem.constraints:
        worst = max(worst, cone_violation(cone, matrix @ x + offset))
    return worst


def cubic_power_constraint(
    r_var: Tuple[str, int], t_var: Tuple[str, int], c: float
) -> List[ConstraintRows]:
    """Rows encoding ``t ≥ c·r³`` and ``r ≥ 0``.

    Uses the 3-D power cone ``x^{1/3} y^{2/3} ≥ |z|`` on ``(t/c, 1, r)``.

    Args:
        r_var: ``(block name, index)`` of ``r``
        t_var: ``(block name, index)`` of ``t``
        c: Positive coefficient

    Returns:
        Constraint rows to add with :meth:`ConicProblem.add_rows`
    """
    if c <= 0:
        raise ValueError("Cubic coefficient must be positive")
    r_name, r_idx = r_var
    t_name, t_idx = t_var
    if r_name == t_name:
        width = max(r_idx, t_idx) + 1
        both = _selector(r_idx, 3, row=2, width=width) + _selector(
            t_idx, 3, row=0, value=1.0 / c, width=width
        )
        terms: Dict[str, Coefficients] = {r_name: both.tocoo()}
    else:
        terms = {
            r_name: _selector(r_idx, 3, row=2),
            t_name: _selector(t_idx, 3, row=0, value=1.0 / c),
        }
    return [
        ConstraintRows(
            terms, np.array([0.0, 1.0, 0.0]), Cone.power3(1.0 / 3.0), f"cubic[{r_name}{r_idx}]"
        ),
        ConstraintRows(
            {r_name: _selector(r_idx, 1, row=0)}, np.zeros(1), Cone.nonnegative(1),
            f"nonneg[{r_name}{r_idx}]",
        ),
    ]


def _selector(
    index: int, rows: int, row: int, value: float = 1.0, width: Optional[int] = None
) -> sp.coo_matrix:
    width = index + 1 if width is None else width
    return sp.coo_matrix(([value], ([row], [index])), shape=(rows, width))


@dataclass(frozen=True)
class HermitianEmbedding:
    """Real parametrization of ``n x n`` Hermitian matrices.

    The parameter vector holds the upper triangle (diagonal included) of
    ``Re V`` followed by the strict upper triangle of ``Im V``. The PSD test
    uses ``[[Re V, -Im V], [Im V, Re V]]``, whose trace is twice ``tr V``.
    """

    n: int
    trace_factor: float = 2.0

    @property
    def upper(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.triu_indices(self.n)

    @property
    def strict_upper(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.triu_indices(self.n, k=1)

    @property
    def n_real(self) -> int:
        return self.n * (self.n + 1) // 2

    @property
    def size(self) -> int:
        """Length of the parameter vector (``n²``)."""
        return self.n * self.n

    def embed(self, m: np.ndarray) -> np.ndarray:
        """Real ``2n x 2n`` embedding of a complex matrix."""
        m = np.asarray(m, dtype=complex)
        m = 0.5 * (m + m.conj().T)
        return np.block([[m.real, -m.imag], [m.imag, m.real]])

    def recover(self, x: np.ndarray) -> np.ndarray:
        """Complex matrix from a real embedding."""
        n = self.n
        re = 0.5 * (x[:n, :n] + x[n:, n:])
        im = 0.5 * (x[n:, :n] - x[:n, n:])
        return re + 1j * im

    def to_params(self, m: np.ndarray) -> np.ndarray:
        """Parameter vector of a Hermitian matrix."""
        m = np.asarray(m, dtype=complex)
        m = 0.5 * (m + m.conj().T)
        return np.concatenate([m.real[self.upper], m.imag[self.strict_upper]])

    def from_params(self, p: np.ndarray) -> np.ndarray:
        """Hermitian matrix of a parameter vector."""
        n = self.n
        re = np.zeros((n, n))
        im = np.zeros((n, n))
        re[self.upper] = p[: self.n_real]
        re = re + np.triu(re, k=1).T
        im[self.strict_upper] = p[self.n_real:]
        im = im - im.T
        return re + 1j * im

    def diag_index(self, i: int) -> int:
        """Parameter index of ``V_ii``."""
        rows, cols = self.upper
        return int(np.flatnonzero((rows == i) & (cols == i))[0])

    def trace_coefficients(self, b: np.ndarray) -> np.ndarray:
        """Vector ``a`` with ``Re tr(B V) = a·p`` for Hermitian ``B``."""
        b = np.asarray(b, dtype=complex)
        rows, cols = self.upper
        # B_ji entries for i<=j; diagonal counted once
        coef_re = np.where(rows == cols, b[rows, cols].real, 2.0 * b[cols, rows].real)
        srows, scols = self.strict_upper
        coef_im = -2.0 * b[scols, srows].imag
        return np.concatenate([coef_re, coef_im])

    def psd_map(self) -> sp.csr_matrix:
        """Sparse map from parameters to ``vec_F`` of the real embedding."""
        n = self.n
        dim = 2 * n
        rows: List[int] = []
        cols: List[int] = []
        vals: List[float] = []

        def put(r: int, c: int, k: int, v: float) -> None:
            rows.append(r + c * dim)
            cols.append(k)
            vals.append(v)

        for k, (i, j) in enumerate(zip(*self.upper)):
            put(i, j, k, 1.0)
            put(i + n, j + n, k, 1.0)
            if i != j:
                put(j, i, k, 1.0)
                put(j + n, i + n, k, 1.0)
        for k, (i, j) in enumerate(zip(*self.strict_upper), start=self.n_real):
            # lower-left block holds Im V, upper-right block -Im V
            put(i + n, j, k, 1.0)
            put(j + n, i, k, -1.0)
            put(i, j + n, k, -1.0)
            put(j, i + n, k, 1.0)
        return sp.csr_matrix((vals, (rows, cols)), shape=(dim * dim, self.size))


def embed_hermitian_psd(n: int) -> HermitianEmbedding:
    """Describe the real ``2n x 2n`` PSD block for an ``n x n`` Hermitian matrix."""
    if n < 1:
        raise ValueError("Embedding dimension must be positive")
    return HermitianEmbedding(n)


@dataclass
class _DumpTarget:
    directory: Path
    counter: Iterator[int]


_DUMP: ContextVar[Optional[_DumpTarget]] = ContextVar("star_iscc_conic_dump", default=None)


@contextlib.contextmanager
def dump_problems(directory: Optional[Path]) -> Iterator[None]:
    """Write every problem solved inside the block to ``directory``."""
    if directory is None:
        yield
        return
    directory.mkdir(parents=True, exist_ok=True)
    token = _DUMP.set(_DumpTarget(directory, itertools.count()))
    try:
        yield
    finally:
        _DUMP.reset(token)


def write_cbf(problem: ConicProblem, path: Path) -> None:
    """Write ``problem`` in the conic benchmark text format (version 3).

    PSD constraints go to ``PSDCON``/``HCOORD``/``DCOORD`` using the lower
    triangle of the symmetrized affine matrix; all other cones to ``CON``.
    """
    c, constraints = problem.assemble()
    n_vars = problem.n_vars
    lines = ["VER", "3", "", "OBJSENSE", "MIN", "", "VAR", f"{n_vars} 1", f"F {n_vars}", ""]

    power = [con for con in constraints if con[2].kind is ConeKind.POWER3]
    if power:
        lines += ["POWCONES", f"{len(power)} {2 * len(power)}"]
        for _, _, cone in power:
            alpha = float(cone.exponent)
            lines += ["2", f"{alpha!r}", f"{1.0 - alpha!r}"]
        lines.append("")

    scalar = [con for con in constraints if con[2].kind is not ConeKind.PSD]
    psd = [con for con in constraints if con[2].kind is ConeKind.PSD]
    names = {
        ConeKind.ZERO: "L=",
        ConeKind.NONNEGATIVE: "L+",
        ConeKind.SECOND_ORDER: "Q",
    }
    acoord: List[str] = []
    bcoord: List[str] = []
    if scalar:
        total = sum(con[2].size for con in scalar)
        lines += ["CON", f"{total} {len(scalar)}"]
        offset = 0
        power_idx = 0
        for matrix, b, cone in scalar:
            if cone.kind is ConeKind.POWER3:
                lines.append(f"@{power_idx}:POW {cone.size}")
                power_idx += 1
            else:
                lines.append(f"{names[cone.kind]} {cone.size}")
            coo = matrix.tocoo()
            acoord += [f"{offset + r} {col} {v!r}" for r, col, v in zip(coo.row, coo.col, coo.data)]
            bcoord += [f"{offset + i} {v!r}" for i, v in enumerate(b) if v != 0.0]
            offset += cone.size
        lines.append("")

    if psd:
        lines += ["PSDCON", str(len(psd))] + [str(cone.dim) for _, _, cone in psd] + [""]
        hcoord: List[str] = []
        dcoord: List[str] = []
        for k, (matrix, b, cone) in enumerate(psd):
            n = cone.dim
            coo = matrix.tocoo()
            entries: Dict[Tuple[int, int, int], float] = {}
            for r, col, v in zip(coo.row, coo.col, coo.data):
                i, j = r % n, r // n
                key = (col, max(i, j), min(i, j))
                entries[key] = entries.get(key, 0.0) + (v if i == j else 0.5 * v)
            hcoord += [
                f"{k} {col} {i} {j} {v!r}" for (col, i, j), v in sorted(entries.items()) if v != 0.0
            ]
            const: Dict[Tuple[int, int], float] = {}
            for r, v in enumerate(b):
                if v != 0.0:
                    i, j = r % n, r // n
                    key2 = (max(i, j), min(i, j))
                    const[key2] = const.get(key2, 0.0) + (v if i == j else 0.5 * v)
            dcoord += [f"{k} {i} {j} {v!r}" for (i, j), v in sorted(const.items()) if v != 0.0]
        if hcoord:
            lines += ["HCOORD", str(len(hcoord))] + hcoord + [""]
        if dcoord:
            lines += ["DCOORD", str(len(dcoord))] + dcoord + [""]

    obj = [f"{j} {v!r}" for j, v in enumerate(c) if v != 0.0]
    if obj:
        lines += ["OBJACOORD", str(len(obj))] + obj + [""]
    if problem.objective_constant != 0.0:
        lines += ["OBJBCOORD", f"{problem.objective_constant!r}", ""]
    if acoord:
        lines += ["ACOORD", str(len(acoord))] + acoord + [""]
    if bcoord:
        lines += ["BCOORD", str(len(bcoord))] + bcoord + [""]

    path.write_text("\n".join(lines) + "\n")


_STATUS_MAP = {
    cp.OPTIMAL: ConicStatus.OPTIMAL,
    cp.INFEASIBLE: ConicStatus.INFEASIBLE,
    cp.UNBOUNDED: ConicStatus.UNBOUNDED,
}


def _flatten(value: Any) -> np.ndarray:
    if value is None:
        return np.zeros(0)
    if isinstance(value, (list, tuple)):
        parts = [_flatten(v) for v in value]
        return np.concatenate(parts) if parts else np.zeros(0)
    arr = np.asarray(value, dtype=float)
    return arr.ravel(order="F")


def _cvx_constraint(expr: cp.Expression, cone: Cone) -> cp.Constraint:
    if cone.kind is ConeKind.ZERO:
        return expr == 0
    if cone.kind is ConeKind.NONNEGATIVE:
        return expr >= 0
    if cone.kind is ConeKind.SECOND_ORDER:
        return cp.SOC(expr[0], expr[1:])
    if cone.kind is ConeKind.POWER3:
        return cp.PowCone3D(expr[0], expr[1], expr[2], float(cone.exponent))
    matrix = cp.reshape(expr, (cone.dim, cone.dim), order="F")
    return 0.5 * (matrix + matrix.T) >> 0


def _backends() -> List[Tuple[str, Dict[str, Any]]]:
    installed = set(cp.installed_solvers())
    backends = []
    if cp.CLARABEL in installed:
        backends.append(
            (cp.CLARABEL, {"tol_gap_abs": 1e-10, "tol_gap_rel": 1e-10, "tol_feas": 1e-10})
        )
    if cp.SCS in installed:
        backends.append((cp.SCS, {"eps": 1e-9, "max_iters": 100000}))
    return backends


def _dual_diagnostics(
    problem: ConicProblem, x: np.ndarray, duals: List[np.ndarray]
) -> Tuple[float, float]:
    c, constraints = problem.assemble()
    stationarity = c.copy()
    zero_blocks = []
    dual_obj = 0.0
    for (matrix, b, cone), y in zip(constraints, duals):
        if y.size != cone.size:
            return float("nan"), float("nan")
        if cone.kind is ConeKind.ZERO:
            zero_blocks.append((matrix, b))
            continue
        stationarity -= matrix.T @ y
        dual_obj -= float(b @ y)
    if zero_blocks:
        # sign conventions for equality multipliers vary by backend; refit them
        a_zero = sp.vstack([m for m, _ in zero_blocks]).tocsr()
        b_zero = np.concatenate([b for _, b in zero_blocks])
        y_zero = np.linalg.lstsq(a_zero.T.toarray(), stationarity, rcond=None)[0]
        stationarity -= a_zero.T @ y_zero
        dual_obj -= float(b_zero @ y_zero)
    primal_obj = float(c @ x)
    dual_res = float(np.linalg.norm(stationarity) / (1.0 + np.linalg.norm(c)))
    gap = abs(primal_obj - dual_obj) / (1.0 + abs(primal_obj))
    return dual_res, float(gap)


def certified_status(
    status: ConicStatus,
    residual: float,
    dual_res: float,
    gap: float,
    verify_tol: float = VERIFY_TOL,
) -> ConicStatus:
    """Keep ``optimal`` only when the primal point, the stationarity residual and
    the duality gap all pass; anything unverifiable becomes ``numerical_limit``."""
    if status is not ConicStatus.OPTIMAL:
        return status
    if residual <= verify_tol and dual_res <= DUAL_TOL and gap <= GAP_TOL:
        return status
    return ConicStatus.NUMERICAL_LIMIT


def solve(problem: ConicProblem, verify_tol: float = VERIFY_TOL) -> ConicSolution:
    """Solve a conic program.

    Infeasible, unbounded and inaccurate outcomes are reported through the
    status, never raised. An ``optimal`` answer is downgraded to
    ``numerical_limit`` when its primal point violates a cone by more than
    ``verify_tol``, or when the dual residual or the relative duality gap
    exceeds 1e-8.

    Args:
        problem: Program to solve
        verify_tol: Cone-violation tolerance of the independent check

    Returns:
        ConicSolution
    """
    target = _DUMP.get()
    if target is not None:
        path = target.directory / f"{next(target.counter):04d}_{problem.name}.cbf"
        write_cbf(problem, path)
        logger.debug("Dumped %s to %s", problem.name, path)

    c, constraints = problem.assemble()
    x = cp.Variable(problem.n_vars)
    cvx_constraints = [
        _cvx_constraint(cp.Constant(matrix) @ x + b, cone) for matrix, b, cone in constraints
    ]
    cvx_problem = cp.Problem(cp.Minimize(c @ x + problem.objective_constant), cvx_constraints)

    status = ConicStatus.NUMERICAL_LIMIT
    used = ""
    for backend, options in _backends():
        used = backend
        try:
            cvx_problem.solve(solver=backend, **options)
        except cp.error.SolverError as e:
            logger.debug("%s failed on %s: %s", backend, problem.name, e)
            continue
        status = _STATUS_MAP.get(cvx_problem.status, ConicStatus.NUMERICAL_LIMIT)
        if status is not ConicStatus.NUMERICAL_LIMIT or x.value is not None:
            break

    if status is not ConicStatus.OPTIMAL and status is not ConicStatus.NUMERICAL_LIMIT:
        logger.debug("%s: %s", problem.name, status.value)
        return ConicSolution(status=status, x=None, solver=used)
    if x.value is None:
        return ConicSolution(status=ConicStatus.NUMERICAL_LIMIT, x=None, solver=used)

    xv = np.asarray(x.value, dtype=float)
    residual = primal_residual(problem, xv)
    if status is ConicStatus.OPTIMAL and residual > verify_tol:
        logger.warning(
            "%s: solver reported optimal but cone violation is %.2e", problem.name, residual
        )
        status = ConicStatus.NUMERICAL_LIMIT

    duals = [_flatten(con.dual_value) for con in cvx_constraints]
    dual_res, gap = _dual_diagnostics(problem, xv, duals)
    checked = certified_status(status, residual, dual_res, gap, verify_tol)
    if checked is not status:
        logger.debug(
            "%s: optimal not certified (dual residual %.2e, gap %.2e)", problem.name, dual_res, gap
        )
        status = checked
    return ConicSolution(
        status=status,
        x=xv,
        duals=tuple(duals),
        objective=float(c @ xv + problem.objective_constant),
        primal_residual=residual,
        dual_residual=dual_res,
        gap=gap,
        solver=used,
    )
