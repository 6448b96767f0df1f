"""Build the finite operator tuple (R, R1, p, q, Jp, phi, phi1, Sigma*, A) from spectral data.

The cyclic case lives in the orthonormal basis diagonalizing R, with
``p = sqrt(a_k)`` from the interlacing weights.  The multiplicity case lays
out one block per eigenvalue level: the block of ``R`` at ``lambda_k`` has
dimension ``card supp rho_k`` and carries ``p_k = sqrt(w_k) e_0``, the block
at ``mu_k`` has dimension ``card supp rho1_k - 1``.  In both constructions
every matrix except the phase operators is real, so the canonical conjugation
is entrywise -- its matrix representation is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BundleInvariantError,
    DegenerateSpectrumError,
    SquareRootFailureError,
    SupportNotCyclicError,
)
from .spectral_data import AtomicMeasure, CompactSpectralData, borg_weights

# Relative tolerances for the structural identities checked on every bundle.
RANK_ONE_RTOL = 1e-12
DEFECT_TOL = 1e-10
COMMUTE_RTOL = 1e-12
CONJUGATION_TOL = 1e-12
CLAMP_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class BlockLayout:
    """Index bookkeeping for the block basis.

    ``lam_blocks[k]`` are the global indices of ``ker(R - lambda_k I)``; the
    first one carries ``p_k``.  ``mu_blocks[k]`` are the indices of
    ``ker(R - mu_k I)`` (empty for simple levels and at a terminal zero).
    """

    lam: tuple
    mu: tuple
    lam_blocks: tuple
    mu_blocks: tuple

    @property
    def dim(self) -> int:
        return sum(len(b) for b in self.lam_blocks) + sum(len(b) for b in self.mu_blocks)

    @property
    def n_levels(self) -> int:
        return len(self.lam)

    @property
    def h0_indices(self) -> tuple:
        """Basis indices spanning the cyclic subspace of (R, p)."""
        return tuple(b[0] for b in self.lam_blocks)

    @property
    def k_indices(self) -> tuple:
        """Indices spanning the lambda eigenspaces of R1 (phi1 acts as I here)."""
        return tuple(i for b in self.lam_blocks for i in b[1:])

    @property
    def k1_indices(self) -> tuple:
        """Indices spanning the mu eigenspaces of R (phi acts as I here)."""
        return tuple(i for b in self.mu_blocks for i in b)

    def lam_dim(self, k: int) -> int:
        return len(self.lam_blocks[k])

    def mu_eigdim(self, k: int) -> int:
        """Dimension of ker(R1 - mu_k I); 1 more than the mu block of R."""
        return len(self.mu_blocks[k]) + 1


@dataclass(frozen=True, eq=False)
class OperatorBundle:
    """Immutable finite-dimensional operator tuple with its defining identities.

    ``Jp`` stores the conjugation as a matrix ``C`` acting by
    ``x -> C @ conj(x)``; ``C`` is unitary and symmetric, which encodes
    involutivity.
    """

    dim: int
    R: np.ndarray
    R1: np.ndarray
    p: np.ndarray
    q: np.ndarray
    qhat: np.ndarray
    phi: np.ndarray
    phi1: np.ndarray
    Jp: np.ndarray
    sigma_star: np.ndarray
    sigma_hat_star: np.ndarray
    A: np.ndarray
    layout: BlockLayout

    def conjugate(self, x: np.ndarray) -> np.ndarray:
        """Apply the stored conjugation to a vector or (columnwise) matrix."""
        return self.Jp @ np.conj(x)

    @property
    def r_norm(self) -> float:
        return float(np.linalg.norm(self.R, 2))


def _psd_sqrt(W: np.ndarray, scale: float):
    """Eigendecompose a Hermitian PSD matrix and return (sqrt, eigvals, vecs).

    Eigenvalues in ``(-CLAMP_RTOL * scale, 0)`` are clamped to zero; anything
    further below raises, since the matrix was supposed to be PSD.
    """
    evals, vecs = np.linalg.eigh(W)
    floor = -CLAMP_RTOL * max(scale, 1.0)
    if np.any(evals < floor):
        raise SquareRootFailureError(
            f"eigenvalue {evals.min():.3e} below the PSD clamp {floor:.3e}")
    evals = np.clip(evals, 0.0, None)
    root = (vecs * np.sqrt(evals)) @ vecs.conj().T
    return root, evals, vecs


def _fix_vector_phases(vecs: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Rotate eigenvector phases so <p, v> >= 0, falling back to a positive
    real first nonzero coordinate; keeps eta recovery and phi1 reproducible."""
    out = vecs.astype(complex)
    for j in range(vecs.shape[1]):
        ref = np.vdot(out[:, j], p)  # equals <p, v_j>, linear in p
        if abs(ref) > 1e-14 * max(1.0, float(np.linalg.norm(p))):
            out[:, j] *= ref / abs(ref)
        else:
            nz = np.flatnonzero(np.abs(out[:, j]) > 1e-14)
            x = out[nz[0], j] if len(nz) else 1.0
            out[:, j] *= np.conj(x) / abs(x)
    return out


def _eig_match_tol(lam, mu, scale2: float) -> float:
    """Tolerance for matching eigenvalues of R1^2 to the squared levels:
    well below the smallest gap in the interlacing chain."""
    chain = np.sort(np.concatenate([np.square(lam), np.square(mu)]))
    min_gap = float(np.min(np.diff(chain))) if len(chain) > 1 else scale2
    return max(min(1e-6 * scale2, 0.25 * min_gap), 1e-13 * scale2)


def sigma_star(b: OperatorBundle) -> np.ndarray:
    """``Sigma* = phi1 R1 R^{-1} phi*``, the model backward shift."""
    return _sigma_star(b.R, b.R1, b.phi, b.phi1)


def sigma_hat_star(b: OperatorBundle) -> np.ndarray:
    """``Jp Sigma* Jp = phi1* R1 R^{-1} phi``."""
    return b.phi1.conj().T @ b.R1 @ np.linalg.solve(b.R, b.phi)


def _sigma_star(R, R1, phi, phi1) -> np.ndarray:
    return phi1 @ R1 @ np.linalg.solve(R, phi.conj().T)


def stability_operator_A(b: OperatorBundle) -> np.ndarray:
    """``A = Q* phi1 Q phi*`` with ``Q = R1^{1/2} R^{-1/2}``.

    A is a contraction intertwined with Sigma* through R^{1/2}:
    ``Sigma* R^{1/2} = R^{1/2} A``.
    """
    return _stability_A(b.R, b.R1, b.phi, b.phi1)


def _stability_A(R, R1, phi, phi1) -> np.ndarray:
    scale = float(np.linalg.norm(R, 2)) ** 2
    r_half, _, _ = _psd_sqrt(R, scale)
    r1_half, _, _ = _psd_sqrt(R1, scale)
    r_neg_half = np.linalg.inv(r_half)
    Q = r1_half @ r_neg_half
    return Q.conj().T @ phi1 @ Q @ phi.conj().T


def assemble_from_operators(R, R1, p, phi, phi1, C, layout: BlockLayout,
                            validate: bool = True) -> OperatorBundle:
    """Finish a bundle from its constituent operators and check the invariants.

    Used by both assembly paths and by tests that transform a bundle (change
    of basis, gauge rotation) and need the derived objects recomputed.
    """
    R = np.asarray(R, dtype=complex)
    R1 = np.asarray(R1, dtype=complex)
    p = np.asarray(p, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    phi1 = np.asarray(phi1, dtype=complex)
    C = np.asarray(C, dtype=complex)
    q = phi @ np.linalg.solve(R, p)
    qhat = C @ np.conj(q)
    sigma = _sigma_star(R, R1, phi, phi1)
    sigma_hat = phi1.conj().T @ R1 @ np.linalg.solve(R, phi)
    A = _stability_A(R, R1, phi, phi1)
    bundle = OperatorBundle(
        dim=len(p), R=R, R1=R1, p=p, q=q, qhat=qhat, phi=phi, phi1=phi1,
        Jp=C, sigma_star=sigma, sigma_hat_star=sigma_hat, A=A, layout=layout)
    if validate:
        _validate_bundle(bundle)
    return bundle


def _validate_bundle(b: OperatorBundle):
    r2 = b.r_norm**2
    checks = {
        "R hermitian": np.linalg.norm(b.R - b.R.conj().T) <= RANK_ONE_RTOL * r2,
        "rank-one relation": np.linalg.norm(b.R @ b.R - b.R1 @ b.R1 - np.outer(b.p, b.p.conj()))
        <= RANK_ONE_RTOL * r2 * b.dim,
        "phi unitary": np.linalg.norm(b.phi @ b.phi.conj().T - np.eye(b.dim)) <= 1e-10,
        "phi commutes with R": np.linalg.norm(b.phi @ b.R - b.R @ b.phi)
        <= COMMUTE_RTOL * b.r_norm * b.dim,
        "phi1 commutes with R1": np.linalg.norm(b.phi1 @ b.R1 - b.R1 @ b.phi1)
        <= COMMUTE_RTOL * b.r_norm * b.dim,
        "defect identity": np.linalg.norm(
            np.eye(b.dim) - b.sigma_star.conj().T @ b.sigma_star - np.outer(b.q, b.q.conj()))
        <= DEFECT_TOL,
        "Jp involutive": np.linalg.norm(b.Jp @ np.conj(b.Jp) - np.eye(b.dim)) <= CONJUGATION_TOL,
        "Jp fixes p": np.linalg.norm(b.conjugate(b.p) - b.p)
        <= CONJUGATION_TOL * max(1.0, float(np.linalg.norm(b.p))),
        "phi Jp-symmetric": np.linalg.norm(
            b.phi.conj().T - b.Jp @ np.conj(b.phi) @ np.conj(b.Jp)) <= 1e-9 * b.dim,
        "phi1 Jp-symmetric": np.linalg.norm(
            b.phi1.conj().T - b.Jp @ np.conj(b.phi1) @ np.conj(b.Jp)) <= 1e-9 * b.dim,
    }
    # phi1 must be isometric exactly on (ker R1)^perp and zero on ker R1.
    g = b.phi1.conj().T @ b.phi1
    evals, vecs = np.linalg.eigh(b.R1 @ b.R1)
    kernel = np.abs(evals) <= CLAMP_RTOL * max(r2, 1.0) * b.dim
    proj_kernel = vecs[:, kernel] @ vecs[:, kernel].conj().T
    checks["phi1 partial isometry"] = (
        np.linalg.norm(g - (np.eye(b.dim) - proj_kernel)) <= 1e-9)
    for name, ok in checks.items():
        if not ok:
            raise BundleInvariantError(f"bundle violates: {name}")


def assemble_cyclic(d: CompactSpectralData) -> OperatorBundle:
    """Assemble the tuple for cyclic data in the eigenbasis of R.

    R = diag(lambda), p = sqrt(weights), R1 = PSD root of R^2 - p p*,
    phi = diag(xi), and phi1 carries eta on the eigenvectors of R1 (zero on
    its kernel when the terminal mu vanishes).
    """
    if d.mode != "cyclic":
        raise DegenerateSpectrumError(f"expected cyclic data, got mode {d.mode!r}")
    s = d.spectrum
    n = s.n
    rho = borg_weights(s)
    p = np.sqrt(rho.weights)
    R = np.diag(s.lam).astype(complex)
    W1 = np.diag(s.lam2) - np.outer(p, p)
    evals, vecs = np.linalg.eigh(W1)
    # eigh sorts ascending; level k pairs with the (n-1-k)-th eigenvalue.
    order = np.argsort(evals)[::-1]
    vecs = _fix_vector_phases(vecs[:, order], p.astype(complex))
    mu2_found = evals[order]
    if np.any(np.abs(mu2_found - s.mu2) > 1e-8 * s.scale2):
        raise DegenerateSpectrumError("eigenvalues of R^2 - pp* drifted from mu^2")
    # the eigenvalues of R^2 - pp* are the mu^2 by construction; snapping to
    # them keeps the spectrum of R1 exact (a roundoff residue would survive
    # the square root as sqrt(eps), leaving the kernel only approximately zero)
    R1 = (vecs * s.mu) @ vecs.conj().T
    eta = np.asarray(d.eta, dtype=complex)
    phi1 = (vecs * eta) @ vecs.conj().T
    phi = np.diag(np.asarray(d.xi, dtype=complex))
    layout = BlockLayout(
        lam=tuple(float(v) for v in s.lam),
        mu=tuple(float(v) for v in s.mu),
        lam_blocks=tuple((k,) for k in range(n)),
        mu_blocks=tuple(() for _ in range(n)),
    )
    return assemble_from_operators(R, R1, p, phi, phi1, np.eye(n), layout)


def _measure_frame(m: AtomicMeasure) -> np.ndarray:
    """Real orthogonal map sending e_0 to sqrt(weights) of a probability measure."""
    b = np.sqrt(m.weights / m.weights.sum())
    d = len(b)
    v = b - np.eye(d)[:, 0]
    nv2 = float(v @ v)
    if nv2 <= 1e-30:
        return np.eye(d)
    return np.eye(d) - 2.0 * np.outer(v, v) / nv2


def _phase_block(m: AtomicMeasure) -> np.ndarray:
    """Unitary on the level block whose spectral measure w.r.t. e_0 is ``m``."""
    H = _measure_frame(m)
    return (H * m.points) @ H.T


def _check_cyclic_support(m: AtomicMeasure, where: str):
    if np.any(m.weights <= 1e-14):
        raise SupportNotCyclicError(f"{where}: zero atom weight breaks *-cyclicity")
    scale = max(1.0, float(np.abs(m.points).max()))
    for i in range(len(m.points)):
        for j in range(i + 1, len(m.points)):
            if abs(m.points[i] - m.points[j]) <= 1e-12 * scale:
                raise SupportNotCyclicError(f"{where}: repeated atom breaks *-cyclicity")


def assemble_multiplicity(d: CompactSpectralData) -> OperatorBundle:
    """Assemble the block construction for multiplicity data.

    Per level, phi restricted to the lambda_k eigenspace is the unitary with
    spectral measure rho_k w.r.t. the normalized p_k, and identity on the mu
    blocks; phi1 mirrors this with rho1_k on ker(R1 - mu_k I) and identity on
    the lambda eigenspaces of R1.
    """
    if d.mode != "multiplicity":
        raise DegenerateSpectrumError(f"expected multiplicity data, got mode {d.mode!r}")
    s = d.spectrum
    n = s.n
    for k, m in enumerate(d.rho):
        _check_cyclic_support(m, f"rho[{k}]")
    for k, m in enumerate(d.rho1):
        if m is not None:
            _check_cyclic_support(m, f"rho1[{k}]")

    lam_blocks = []
    mu_blocks = []
    pos = 0
    for k in range(n):
        size = len(d.rho[k].points)
        lam_blocks.append(tuple(range(pos, pos + size)))
        pos += size
    for k in range(n):
        size = 0 if d.rho1[k] is None else len(d.rho1[k].points) - 1
        mu_blocks.append(tuple(range(pos, pos + size)))
        pos += size
    dim = pos
    layout = BlockLayout(
        lam=tuple(float(v) for v in s.lam),
        mu=tuple(float(v) for v in s.mu),
        lam_blocks=tuple(lam_blocks),
        mu_blocks=tuple(mu_blocks),
    )

    diag = np.empty(dim)
    for k in range(n):
        diag[list(lam_blocks[k])] = s.lam[k]
        if mu_blocks[k]:
            diag[list(mu_blocks[k])] = s.mu[k]
    R = np.diag(diag).astype(complex)

    rho = borg_weights(s)
    p = np.zeros(dim)
    for k in range(n):
        p[lam_blocks[k][0]] = np.sqrt(rho.weights[k])

    W1 = np.diag(diag**2) - np.outer(p, p)
    evals, vecs = np.linalg.eigh(W1)
    # every eigenvalue of R^2 - pp* is one of the known level values; snap so
    # the spectrum of R1 is exact and its kernel genuinely vanishes
    targets = np.concatenate([s.mu2, s.lam2])
    snapped = targets[np.argmin(np.abs(evals[:, None] - targets[None, :]), axis=1)]
    if np.any(np.abs(evals - snapped) > _eig_match_tol(s.lam, s.mu, s.scale2)):
        raise DegenerateSpectrumError("eigenvalues of R^2 - pp* drifted from the levels")
    evals = snapped
    R1 = (vecs * np.sqrt(evals)) @ vecs.conj().T

    phi = np.eye(dim, dtype=complex)
    for k in range(n):
        idx = np.asarray(lam_blocks[k])
        phi[np.ix_(idx, idx)] = _phase_block(d.rho[k])

    # ker(R1 - mu_k I) = span{p1_k} + the mu_k block of R; p1_k is the
    # projection of p onto the mu_k^2 eigenspace of R^2 - pp*.
    phi1 = np.zeros((dim, dim), dtype=complex)
    for k in range(n):
        for j in lam_blocks[k][1:]:
            phi1[j, j] = 1.0
    tol = _eig_match_tol(s.lam, s.mu, s.scale2)
    for k in range(n):
        sel = np.abs(evals - s.mu2[k]) <= tol
        if not np.any(sel):
            raise DegenerateSpectrumError(f"missing mu[{k}]^2 eigenvalue in R1^2")
        basis = vecs[:, sel]
        p1 = basis @ (basis.conj().T @ p)
        norm_p1 = float(np.linalg.norm(p1))
        if norm_p1 <= 1e-12:
            raise DegenerateSpectrumError(f"projection of p onto level mu[{k}] vanished")
        p1hat = (p1 / norm_p1).real  # real symmetric W1 has real eigenvectors
        if d.rho1[k] is None:
            continue  # phi1 vanishes on ker R1 at the terminal zero
        cols = [p1hat] + [np.eye(dim)[:, j] for j in mu_blocks[k]]
        B = np.column_stack(cols)
        phi1 += B @ _phase_block(d.rho1[k]) @ B.T

    return assemble_from_operators(R, R1, p, phi, phi1, np.eye(dim), layout)


def assemble(d: CompactSpectralData) -> OperatorBundle:
    """Dispatch on the data mode."""
    if d.mode == "cyclic":
        return assemble_cyclic(d)
    return assemble_multiplicity(d)


def level_projections(b: OperatorBundle):
    """Per-level data derived from the bundle: (p_k, p1_k) vectors.

    p_k is supported on the k-th lambda block; p1_k is the projection of p
    onto ker(R1 - mu_k I), recomputed from R1 by eigendecomposition.
    """
    lay = b.layout
    evals, vecs = np.linalg.eigh(b.R1 @ b.R1)
    scale2 = max(float(np.max(np.abs(evals))), 1.0)
    tol = _eig_match_tol(np.asarray(lay.lam), np.asarray(lay.mu), scale2)
    p_ks = []
    p1_ks = []
    for k in range(lay.n_levels):
        pk = np.zeros(b.dim, dtype=complex)
        idx = list(lay.lam_blocks[k])
        pk[idx] = b.p[idx]
        p_ks.append(pk)
        sel = np.abs(evals - lay.mu[k] ** 2) <= tol
        basis = vecs[:, sel]
        p1_ks.append(basis @ (basis.conj().T @ b.p))
    return p_ks, p1_ks


def conjugation_check(b: OperatorBundle, trials: int = 50, seed: int = 0) -> dict:
    """Numerically verify the conjugation laws; returns max residual per law."""
    rng = np.random.default_rng(seed)
    dim = b.dim
    C = b.Jp
    eye = np.eye(dim)

    def rand_vec():
        return rng.standard_normal(dim) + 1j * rng.standard_normal(dim)

    anti = 0.0
    flip = 0.0
    iso = 0.0
    for _ in range(trials):
        x, y = rand_vec(), rand_vec()
        al, be = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
        anti = max(anti, float(np.linalg.norm(
            b.conjugate(al * x + be * y)
            - np.conj(al) * b.conjugate(x) - np.conj(be) * b.conjugate(y))
            / max(1.0, np.linalg.norm(x) + np.linalg.norm(y))))
        flip = max(flip, abs(np.vdot(y, b.conjugate(x)) - np.vdot(x, b.conjugate(y)))
                   / max(1.0, float(np.linalg.norm(x) * np.linalg.norm(y))))
        iso = max(iso, abs(np.linalg.norm(b.conjugate(x)) - np.linalg.norm(x))
                  / max(1.0, float(np.linalg.norm(x))))

    def jsym_residual(M):
        # T is Jp-symmetric iff T* = C conj(T) conj(C).
        return float(np.linalg.norm(M.conj().T - C @ np.conj(M) @ np.conj(C)))

    return {
        "antilinear": anti,
        "involutive": float(np.linalg.norm(C @ np.conj(C) - eye)),
        "isometric": max(iso, float(np.linalg.norm(C.conj().T @ C - eye))),
        "fixes_p": float(np.linalg.norm(b.conjugate(b.p) - b.p)),
        "commutes_R": float(np.linalg.norm(C @ np.conj(b.R) - b.R @ C)),
        "commutes_R1": float(np.linalg.norm(C @ np.conj(b.R1) - b.R1 @ C)),
        "symmetry_phi": jsym_residual(b.phi),
        "symmetry_phi1": jsym_residual(b.phi1),
        "inner_product_flip": flip,
    }
