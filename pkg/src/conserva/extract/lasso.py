"""Variance-minimizing linear combinations of library functions.

For each training trajectory the library features are centred in time; the
summed Gram matrix C = (1/N) sum_i P_i^T P_i is positive semidefinite and its
smallest eigenvector is the best-conserved combination.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..dataset import Trajectory
from ..errors import DegenerateLibraryError
from ..systems import SystemSpec
from .candidate import Candidate
from .expression import Node, apply, const, evaluate, linear_combination, power_node, product_node, var

log = logging.getLogger(__name__)

LV_EPS = 1e-8
PARAMETRIC_MAX_DEGREE = 2
# Eigenvalues within NULL_RATIO of the smallest one span the null space.
NULL_RATIO = 1e2
NULL_FLOOR = 1e-14


class FeatureOverflowError(ValueError):
    """Library features of a trajectory are not finite"""

    def __init__(self, traj_id: int):
        self.traj_id = traj_id
        super().__init__(f"non-finite library features on trajectory {traj_id}")


@dataclass(frozen=True)
class Monomial:
    exponents: Tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def column(self, states: np.ndarray) -> np.ndarray:
        return np.prod(states ** np.asarray(self.exponents), axis=1)

    def node(self, names: Sequence[str]) -> Node:
        factors = [power_node(var(n), k) for n, k in zip(names, self.exponents) if k > 0]
        return product_node(factors)

    def label(self, names: Sequence[str]) -> str:
        parts = [n if k == 1 else f"{n}^{k}" for n, k in zip(names, self.exponents) if k > 0]
        return "*".join(parts)


def monomial_library(dim: int, max_degree: int = 4) -> List[Monomial]:
    """Non-constant monomials in graded lexicographic order"""
    library = []
    for degree in range(1, max_degree + 1):
        exps = [e for e in itertools.product(range(degree + 1), repeat=dim) if sum(e) == degree]
        library.extend(Monomial(tuple(e)) for e in sorted(exps, reverse=True))
    return library


def build_monomial_features(traj: Trajectory, library: Sequence[Monomial]) -> np.ndarray:
    """Time-centred (T, M) feature matrix of one trajectory"""
    states = np.asarray(traj.states, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        features = np.column_stack([m.column(states) for m in library])
    if not np.all(np.isfinite(features)):
        raise FeatureOverflowError(traj.traj_id)
    return features - features.mean(axis=0)


@dataclass(frozen=True)
class FeatureLibrary:
    """Named basis functions of state variables and, optionally, parameters"""
    tag: str
    labels: Tuple[str, ...]
    terms: Tuple[Node, ...]
    variables: Tuple[str, ...]

    def values(self, states: np.ndarray, params: Mapping[str, float], traj_id: int = -1) -> np.ndarray:
        """Uncentred (T, M) library values at the given states"""
        states = np.asarray(states, dtype=np.float64)
        T = states.shape[0]
        env = {name: states[:, j] for j, name in enumerate(self.variables)}
        env.update({name: np.full(T, float(v)) for name, v in params.items()})
        columns = []
        for term in self.terms:
            values, valid = evaluate(term, env)
            if not valid.all():
                raise FeatureOverflowError(traj_id)
            columns.append(values)
        return np.column_stack(columns)

    def features(self, traj: Trajectory) -> np.ndarray:
        values = self.values(traj.states, traj.params, traj.traj_id)
        return values - values.mean(axis=0)

    def noise_bias(self, traj: Trajectory, sigma: float, h: float = 1e-5) -> np.ndarray:
        """Expected excess of P^T P caused by i.i.d. N(0, sigma^2) state noise.

        First order in sigma: sigma^2 (T-1)/T sum_t J_t J_t^T, with the library
        Jacobian J_t taken by central differences at the observed states.
        """
        states = np.asarray(traj.states, dtype=np.float64)
        T, D = states.shape
        bias = np.zeros((len(self.terms), len(self.terms)))
        for j in range(D):
            step = np.zeros(D)
            step[j] = h
            d = (self.values(states + step, traj.params, traj.traj_id)
                 - self.values(states - step, traj.params, traj.traj_id)) / (2.0 * h)
            bias += d.T @ d
        return sigma * sigma * (T - 1) / T * bias


def _parametric_terms(base_labels, base_terms, params: Sequence[str]):
    labels, terms = [], []
    for name in params:
        for g_label, g_node in ((name, var(name)), (f"1/{name}", apply("div", const(1.0), var(name)))):
            for label, term in zip(base_labels, base_terms):
                labels.append(f"{g_label}*{label}")
                terms.append(apply("mul", g_node, term))
    return labels, terms


def polynomial_library(names: Sequence[str], max_degree: int = 4,
                       parametric_params: Sequence[str] = ()) -> FeatureLibrary:
    monomials = monomial_library(len(names), max_degree)
    labels = [m.label(names) for m in monomials]
    terms = [m.node(names) for m in monomials]
    low = [m for m in monomials if m.degree <= PARAMETRIC_MAX_DEGREE]
    extra_labels, extra_terms = _parametric_terms(
        [m.label(names) for m in low], [m.node(names) for m in low], parametric_params)
    tag = f"monomial-grlex-deg{max_degree}" + ("-param" if parametric_params else "")
    return FeatureLibrary(tag, tuple(labels + extra_labels), tuple(terms + extra_terms), tuple(names))


def lv_library(names: Sequence[str], eps: float = LV_EPS, parametric_params: Sequence[str] = ()) -> FeatureLibrary:
    x, y = var(names[0]), var(names[1])
    labels = [names[0], names[1], f"log({names[0]}+eps)", f"log({names[1]}+eps)"]
    terms = [x, y, apply("log", apply("add", x, const(eps))), apply("log", apply("add", y, const(eps)))]
    extra_labels, extra_terms = _parametric_terms(labels, terms, parametric_params)
    tag = "lv-log" + ("-param" if parametric_params else "")
    return FeatureLibrary(tag, tuple(labels + extra_labels), tuple(terms + extra_terms), tuple(names))


def jacobi_eigh(C: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60) -> Tuple[np.ndarray, np.ndarray]:
    """All eigenpairs of a symmetric matrix by cyclic Jacobi rotations, ascending.

    The matrix is scaled to unit Frobenius norm first, so the rotations and the
    returned vectors do not depend on the overall scale of C.
    """
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("matrix must be square")
    n = C.shape[0]
    scale = float(np.linalg.norm(C))
    if not np.isfinite(scale):
        raise ValueError("matrix has non-finite entries")
    if not np.allclose(C, C.T, rtol=1e-10, atol=1e-12 * max(scale, 1e-300)):
        raise ValueError("matrix must be symmetric")
    if scale == 0.0:
        return np.zeros(n), np.eye(n)

    A = (C + C.T) / (2.0 * scale)
    V = np.eye(n)
    polished = False
    for _ in range(max_sweeps):
        off = np.sqrt(max(0.0, np.sum(A * A) - np.sum(np.diag(A) ** 2)))
        if off < tol:
            if polished:
                break
            polished = True
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p, row_q = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                vec_p, vec_q = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vec_p - s * vec_q
                V[:, q] = s * vec_p + c * vec_q
    else:
        log.warning(f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal norm {off:.3e})")

    order = np.argsort(np.diag(A), kind="stable")
    return np.diag(A)[order] * scale, V[:, order]


def _signed_unit(w: np.ndarray) -> np.ndarray:
    w = w / np.linalg.norm(w)
    if w[int(np.argmax(np.abs(w)))] < 0:
        w = -w
    return w


def smallest_eigvec(C: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60) -> Tuple[float, np.ndarray]:
    """Minimal eigenpair of a symmetric matrix.

    The eigenvector is signed so that its largest-magnitude component is positive.
    """
    values, vectors = jacobi_eigh(C, tol, max_sweeps)
    return float(values[0]), _signed_unit(vectors[:, 0].copy())


def null_space_dimension(values: np.ndarray, resolution: float = 0.0, ratio: float = NULL_RATIO) -> int:
    """Number of ascending eigenvalues indistinguishable from the smallest one.

    Eigenvalues within ratio * max(|lambda_0|, resolution) of lambda_0 count as
    null; resolution carries the numerical and noise floor of the Gram matrix.
    """
    values = np.asarray(values, dtype=np.float64)
    floor = max(NULL_FLOOR * float(np.max(np.abs(values))), float(resolution))
    band = ratio * max(abs(float(values[0])), floor)
    return int(np.sum(values - values[0] <= band))


def canonical_null_vector(basis: np.ndarray, pivot_tol: float = 1e-3) -> np.ndarray:
    """First row of the reduced row echelon form of a null-space basis.

    basis has one basis vector per column. The returned unit vector has the
    earliest possible leading library term and no weight on the leading terms of
    the other echelon rows, which makes the choice independent of how the
    eigen-solver rotated the degenerate subspace.
    """
    R = np.asarray(basis, dtype=np.float64).T.copy()
    r, m = R.shape
    if r == 1:
        return _signed_unit(R[0])
    tol = pivot_tol * float(np.max(np.abs(R)))
    row = 0
    for col in range(m):
        if row == r:
            break
        pivot = row + int(np.argmax(np.abs(R[row:, col])))
        if abs(R[pivot, col]) <= tol:
            continue
        R[[row, pivot]] = R[[pivot, row]]
        R[row] /= R[row, col]
        for other in range(r):
            if other != row:
                R[other] -= R[other, col] * R[row]
        row += 1
    return _signed_unit(R[0])


def _accumulate(trajs: Sequence[Trajectory], features, bias=None) -> Tuple[np.ndarray, Optional[np.ndarray], int]:
    """Mean Gram matrix over trajectories, and the mean noise bias when bias is given"""
    C = None
    B = None
    used = 0
    for traj in trajs:
        try:
            P = features(traj)
            excess = bias(traj) if bias is not None else None
        except FeatureOverflowError as e:
            log.warning(f"Skipping trajectory: {e}")
            continue
        C = P.T @ P if C is None else C + P.T @ P
        if excess is not None:
            B = excess if B is None else B + excess
        used += 1
    if C is None:
        raise DegenerateLibraryError("no trajectory produced finite library features")
    return C / used, (B / used if B is not None else None), used


def _lasso_candidate(trajs: Sequence[Trajectory], library: FeatureLibrary, source: str,
                     features=None, prune: float = 1e-6, noise_sigma: float = 0.0) -> Candidate:
    if len(trajs) < 2:
        raise ValueError("need at least two trajectories")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    bias = (lambda traj: library.noise_bias(traj, noise_sigma)) if noise_sigma > 0 else None
    C, B, used = _accumulate(trajs, features or library.features, bias)
    if not np.any(C):
        raise DegenerateLibraryError(f"{library.tag} features are identically zero on the training data")

    resolution = 0.0
    if B is not None:
        C = C - B
        # the corrected Gram fluctuates at about |B| / sqrt(samples)
        samples = used * np.asarray(trajs[0].states).shape[0]
        resolution = float(np.linalg.norm(B, 2)) / np.sqrt(samples)

    values, vectors = jacobi_eigh(C)
    dim = null_space_dimension(values, resolution)
    w = canonical_null_vector(vectors[:, :dim])
    lam = rayleigh_quotient(C, w)
    if dim > 1:
        log.info(f"{source}: {dim}-dimensional null space, taking its echelon-form direction")
    log.info(f"{source}: lambda_min={lam:.3e} over {len(library.terms)} functions ({library.tag})")
    return Candidate(
        expression=linear_combination(w, library.terms, prune=prune),
        source=source,
        basis_tag=library.tag,
        basis_labels=list(library.labels),
        weights=w,
        lambda_min=lam,
    )


def poly_lasso(trajs: Sequence[Trajectory], names: Optional[Sequence[str]] = None, max_degree: int = 4,
               parametric_params: Sequence[str] = (), noise_sigma: float = 0.0) -> Candidate:
    """Best-conserved combination of monomials up to max_degree.

    With noise_sigma > 0 the Gram matrix is corrected for the first-order bias
    that i.i.d. state noise of that size adds to it.
    """
    if not trajs:
        raise ValueError("need at least two trajectories")
    dim = np.asarray(trajs[0].states).shape[1]
    names = list(names) if names is not None else [f"x{j + 1}" for j in range(dim)]
    library = polynomial_library(names, max_degree, parametric_params)
    if parametric_params:
        return _lasso_candidate(trajs, library, "poly_lasso", noise_sigma=noise_sigma)
    monomials = monomial_library(dim, max_degree)
    return _lasso_candidate(trajs, library, "poly_lasso",
                            features=lambda traj: build_monomial_features(traj, monomials),
                            noise_sigma=noise_sigma)


def lv_lasso(trajs: Sequence[Trajectory], names: Sequence[str] = ("x1", "x2"), eps: float = LV_EPS,
             parametric_params: Sequence[str] = (), noise_sigma: float = 0.0) -> Candidate:
    """Best-conserved combination of x, y, log(x+eps), log(y+eps)"""
    for traj in trajs:
        if np.any(np.asarray(traj.states)[:, :2] <= 0):
            raise ValueError(f"non-positive state on trajectory {traj.traj_id}")
    return _lasso_candidate(trajs, lv_library(names, eps, parametric_params), "lv_lasso",
                            noise_sigma=noise_sigma)


def explicit_pde_candidates(system: SystemSpec) -> List[Candidate]:
    """The spatial mean (first reduced variable) of a PDE system"""
    if not system.is_pde:
        raise ValueError(f"{system.name} is not a PDE system")
    return [Candidate(expression=var("x1"), source="explicit", basis_tag="pde-mean")]


def rayleigh_quotient(C: np.ndarray, v: np.ndarray) -> float:
    v = np.asarray(v, dtype=np.float64)
    return float(v @ C @ v / (v @ v))


def positive_trajectories(trajs: Sequence[Trajectory], n_vars: int = 2) -> List[Trajectory]:
    return [t for t in trajs if np.all(np.asarray(t.states)[:, :n_vars] > 0)]


def monomial_gram(trajs: Sequence[Trajectory], max_degree: int = 4) -> np.ndarray:
    dim = np.asarray(trajs[0].states).shape[1]
    monomials = monomial_library(dim, max_degree)
    return _accumulate(trajs, lambda traj: build_monomial_features(traj, monomials))[0]

