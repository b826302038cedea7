"""Central tolerance configuration.

Every numerical threshold used by the library lives here, so that tests and
experiments quote a single source of truth.  All values are absolute unless
the name says otherwise.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # linear-algebra kernels
    hermiticity_rel: float = 1e-10     # ||A - A^dag||_F / ||A||_F
    eig_residual_rel: float = 1e-10    # ||A - V L V^dag||_F / ||A||_F
    expm_target_rel: float = 1e-12     # documented accuracy for ||A|| <= 50

    # states
    state_eig_clip: float = 1e-10      # eigenvalues >= -this are clipped to 0
    state_trace: float = 1e-10         # |tr - 1| tolerance before renormalizing
    rank_cutoff_scale: float = 1e-10   # support cutoff = scale * dim

    # super-operators
    kernel_trace: float = 1e-12        # tr(phi(rho)) <= this signals a kernel hit
    choi_strict: float = 1e-10         # Choi min eigenvalue above this certifies
    witness_value: float = 1e-12       # min over pure states at or below this refutes
    pf_step: float = 1e-12             # d-distance between successive iterates
    pf_max_iter: int = 100_000
    pf_residual: float = 1e-8
    pf_degenerate_c: float = 1e-6      # sampled c >= 1 - this plus a stall => fallback

    # estimators
    c_zero_floor: float = 1e-13        # sampled c below this counts as exactly 0


DEFAULT = Tolerances()


def rank_cutoff(dim: int, tol: Tolerances = DEFAULT) -> float:
    """Support cutoff used for interior/boundary classification."""
    return tol.rank_cutoff_scale * dim
