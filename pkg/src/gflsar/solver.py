"""Graph fused lasso by ADMM, and the matched-filter baseline.

Solves::

    min_s  1/2 ||y - Theta s||_2^2 + lam_e ||s||_1 + lam_f ||Lambda s||_1

for complex ``s`` through the splitting ``u = s``, ``z = Lambda s``. The
s-step is a linear solve with the fixed matrix
``Theta^H Theta + c_u I + c_z Lambda^H Lambda``, factorised once.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import DivergenceError, FactorizationError

SCHEMES = ("jacobi", "gauss-seidel")


@dataclass(frozen=True)
class GflParams:
    lambda_e: float
    lambda_f: float
    c_u: float = 1.0
    c_z: float = 1.0
    tol: float = 1e-5
    max_iter: int = 100
    scheme: str = "gauss-seidel"

    def __post_init__(self):
        if self.lambda_e < 0 or self.lambda_f < 0:
            raise ValueError("penalties must be nonnegative")
        if not (self.c_u > 0 and self.c_z > 0):
            raise ValueError("c_u and c_z must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")


@dataclass
class SolverState:
    s: np.ndarray
    u: np.ndarray
    z: np.ndarray
    rho_u: np.ndarray
    rho_z: np.ndarray
    iteration: int = 0
    update_norm: float = np.inf

    @classmethod
    def zeros(cls, N, E):
        return cls(*(np.zeros(k, dtype=complex) for k in (N, N, E, N, E)))

    @classmethod
    def start(cls, N, Lambda, init=None):
        if init is None:
            return cls.zeros(N, Lambda.shape[0])
        s = np.asarray(init, dtype=complex).copy()
        return cls(s, s.copy(), Lambda @ s, np.zeros(N, complex), np.zeros(Lambda.shape[0], complex))


@dataclass
class CachedSystem:
    factor: tuple = field(repr=False)
    Thy: np.ndarray = field(repr=False)
    c_u: float
    c_z: float

    def solve(self, b):
        return sla.cho_solve(self.factor, b, check_finite=False)


def _as_sparse(Lambda, N):
    if Lambda is None:
        return sp.csr_matrix((0, N))
    return sp.csr_matrix(Lambda)


def system_matrix(Theta, Lambda, c_u, c_z):
    """Dense ``Theta^H Theta + c_u I + c_z Lambda^H Lambda``."""
    Theta = np.asarray(Theta)
    N = Theta.shape[1]
    Lambda = _as_sparse(Lambda, N)
    A = Theta.conj().T @ Theta
    A = A + c_z * (Lambda.conj().T @ Lambda).toarray()
    A[np.diag_indices(N)] += c_u
    return A


def build_cache(Theta, Lambda, params, y):
    """Factorise the s-step matrix and precompute ``Theta^H y``."""
    Theta = np.asarray(Theta)
    if Theta.shape[0] != np.shape(y)[0]:
        raise ValueError(f"Theta has {Theta.shape[0]} rows but y has {np.shape(y)[0]}")
    A = system_matrix(Theta, Lambda, params.c_u, params.c_z)
    try:
        factor = sla.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"system matrix is not positive definite: {exc}") from exc
    if not np.all(np.isfinite(factor[0])):
        raise FactorizationError("factorisation produced non-finite entries")
    return CachedSystem(factor, Theta.conj().T @ np.asarray(y), params.c_u, params.c_z)


def soft_threshold(v, tau):
    """Complex soft threshold: shrink magnitudes by ``tau``, keep phases."""
    v = np.asarray(v)
    mag = np.abs(v)
    scale = np.maximum(mag - tau, 0.0) / np.where(mag > 0, mag, 1.0)
    return v * scale


def s_update(cache, state, Lambda):
    LH = Lambda.conj().T
    rhs = cache.Thy + state.rho_u + cache.c_u * state.u + LH @ state.rho_z + cache.c_z * (LH @ state.z)
    return cache.solve(rhs)


def u_update(state, params):
    return soft_threshold(state.s - state.rho_u / params.c_u, params.lambda_e / params.c_u)


def z_update(state, Lambda, params):
    return soft_threshold(Lambda @ state.s - state.rho_z / params.c_z, params.lambda_f / params.c_z)


def multiplier_update(state, Lambda, params):
    rho_u = state.rho_u + params.c_u * (state.u - state.s)
    rho_z = state.rho_z + params.c_z * (state.z - Lambda @ state.s)
    return rho_u, rho_z


def objective(Theta, y, Lambda, s, lambda_e, lambda_f):
    r = y - Theta @ s
    val = 0.5 * np.vdot(r, r).real + lambda_e * np.abs(s).sum()
    if Lambda is not None and Lambda.shape[0]:
        val += lambda_f * np.abs(Lambda @ s).sum()
    return float(val)


@dataclass
class GflDiagnostics:
    iterations: int
    converged: bool
    objective: float
    r_u: float
    r_z: float
    history: list = field(default_factory=list, repr=False)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("iter,objective,s_update_norm,r_u_norm,r_z_norm\n")
            for row in self.history:
                fh.write("{},{:.17g},{:.17g},{:.17g},{:.17g}\n".format(*row))


def solve_gfl(Theta, y, Lambda, params, init=None, cache=None):
    """Run ADMM until the relative s-update drops below ``params.tol``.

    ``scheme="jacobi"`` computes s, u and z in each sweep from the previous
    sweep's values, then updates the multipliers. ``"gauss-seidel"`` feeds
    the fresh s into the u and z steps, which is classical two-block ADMM.

    Returns
    -------
    s_hat : ndarray
    diagnostics : GflDiagnostics
    """
    Theta = np.asarray(Theta)
    y = np.asarray(y)
    N = Theta.shape[1]
    Lambda = _as_sparse(Lambda, N)
    if Lambda.shape[1] != N:
        raise ValueError(f"Lambda has {Lambda.shape[1]} columns, Theta has {N}")
    if cache is None:
        cache = build_cache(Theta, Lambda, params, y)
    st = SolverState.start(N, Lambda, init)
    eps = np.finfo(float).eps
    history = []
    converged = False
    for t in range(1, params.max_iter + 1):
        s_new = s_update(cache, st, Lambda)
        if params.scheme == "gauss-seidel":
            st_s = SolverState(s_new, st.u, st.z, st.rho_u, st.rho_z)
        else:
            st_s = st
        u_new = u_update(st_s, params)
        z_new = z_update(st_s, Lambda, params)
        step = np.linalg.norm(s_new - st.s) / max(np.linalg.norm(st.s), eps)
        st = SolverState(s_new, u_new, z_new, st.rho_u, st.rho_z, t, step)
        st.rho_u, st.rho_z = multiplier_update(st, Lambda, params)
        if not (np.all(np.isfinite(st.s)) and np.all(np.isfinite(st.rho_u))
                and np.all(np.isfinite(st.rho_z))):
            raise DivergenceError("non-finite iterate", t)
        r_u = float(np.linalg.norm(st.u - st.s))
        r_z = float(np.linalg.norm(st.z - Lambda @ st.s))
        obj = objective(Theta, y, Lambda, st.s, params.lambda_e, params.lambda_f)
        history.append((t, obj, step, r_u, r_z))
        if step < params.tol:
            converged = True
            break
    diag = GflDiagnostics(st.iteration, converged, obj, r_u, r_z, history)
    return st.s, diag


def backprojection(Theta, y, normalize=True):
    """Matched filter ``Theta^H y``, divided by the row count when ``normalize``."""
    Theta = np.asarray(Theta)
    img = Theta.conj().T @ np.asarray(y)
    if normalize:
        img = img / Theta.shape[0]
    return img
