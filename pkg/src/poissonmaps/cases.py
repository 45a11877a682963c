"""Per-case wiring: state dimensions, fields, conserved quantities, defaults.

A :class:`System` bundles everything the data pipeline and the diagnostics
need to know about one case: the exact vector field, the conserved energy
(the altered Hamiltonian when a softening zeta is set, since that is what
the altered flow conserves), and the Casimir invariant(s).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import systems as S

CASES = ("so2", "so3", "se3")
STATE_DIM = {"so2": S.SO2_DIM, "so3": S.SO3_DIM, "se3": S.SE3_DIM}
N_CASIMIRS = {"so2": 1, "so3": 1, "se3": 2}

# Components entering the figure-style mean absolute error: all momenta,
# plus the displayed first row of the relative orientation for so3.
MAE_COMPONENTS = {
    "so2": tuple(range(3)),
    "so3": tuple(range(6)) + (6, 7, 8),
    "se3": tuple(range(12)),
}


def default_params(case):
    if case in ("so2", "so3"):
        return S.SO3CoupledParams.default()
    if case == "se3":
        return S.SE3CoupledParams.default()
    raise ValueError(f"unknown case {case!r}")


@dataclass(frozen=True)
class System:
    """One reference system: exact field plus its conserved quantities."""

    case: str
    params: object
    zeta: float | None = None

    def __post_init__(self):
        if self.case not in CASES:
            raise ValueError(f"unknown case {self.case!r}")
        if self.zeta is not None and not self.zeta > 0:
            raise ValueError("zeta must be positive when set")

    @property
    def dim(self):
        return STATE_DIM[self.case]

    @property
    def field(self):
        if self.case == "so2":
            base = lambda y: S.so2_vector_field(y, self.params)
        elif self.case == "so3":
            base = lambda y: S.so3_vector_field(y, self.params)
        else:
            base = lambda y: S.se3_vector_field(y, self.params)
        if self.zeta is None:
            return base
        return S.altered_field(self.zeta, base, self.physical_hamiltonian)

    @property
    def physical_hamiltonian(self):
        if self.case == "so2":
            return lambda y: S.so2_hamiltonian(y, self.params)
        if self.case == "so3":
            return lambda y: S.so3_hamiltonian(y, self.params)
        return lambda y: S.se3_hamiltonian(y, self.params)

    @property
    def hamiltonian(self):
        """The energy conserved by :attr:`field` (altered when zeta is set)."""
        h = self.physical_hamiltonian
        if self.zeta is None:
            return h
        return S.altered_hamiltonian(self.zeta, h)

    def casimirs(self, y):
        """Casimir values, shape (..., n_casimirs)."""
        y = np.asarray(y, dtype=float)
        if self.case == "so2":
            return np.expand_dims(S.so2_casimir(y), -1) if y.ndim > 1 else np.atleast_1d(
                S.so2_casimir(y)
            )
        if self.case == "so3":
            return np.expand_dims(S.so3_casimir(y), -1) if y.ndim > 1 else np.atleast_1d(
                S.so3_casimir(y)
            )
        return S.se3_casimirs(y)

    def to_json(self):
        return S.params_to_json(self.case, self.params, self.zeta)


def make_system(case, params=None, zeta=None) -> System:
    return System(case, default_params(case) if params is None else params, zeta)


def system_from_json(doc) -> System:
    case, params, zeta = S.params_from_json(doc)
    return System(case, params, zeta)
