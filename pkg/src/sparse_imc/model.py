"""Inductive factor model X = A P Q B and its boundedness assumptions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# relative slack absorbing round-off in max-norm comparisons
MAX_NORM_SLACK = 1e-12


class DimensionError(ValueError):
    """Raised when two matrices that must multiply (or align) do not."""


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce ``values`` to a finite 2-D float64 array."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def max_norm(M: np.ndarray) -> float:
    """Largest absolute entry; 0 for an empty matrix."""
    return float(np.max(np.abs(M))) if M.size else 0.0


def l0_norm(M: np.ndarray) -> int:
    return int(np.count_nonzero(M))


def exceeds(value: float, bound: float) -> bool:
    return value > bound + MAX_NORM_SLACK * abs(bound)


def check_chain(*named: tuple[str, np.ndarray]) -> None:
    """Check that ``named[0] @ named[1] @ ...`` is well defined."""
    for (ln, left), (rn, right) in zip(named, named[1:]):
        if left.shape[1] != right.shape[0]:
            raise DimensionError(
                f"{ln} ({left.shape[0]}x{left.shape[1]}) does not conform with "
                f"{rn} ({right.shape[0]}x{right.shape[1]})"
            )


def product(A: np.ndarray, P: np.ndarray, Q: np.ndarray, B: np.ndarray) -> np.ndarray:
    check_chain(("A", A), ("P", P), ("Q", Q), ("B", B))
    return A @ (P @ (Q @ B))


@dataclass(frozen=True)
class ImcModel:
    """Known features ``A`` (n1 x r1), ``B`` (r2 x n2) with factors ``P`` (r1 x r), ``Q`` (r x r2).

    ``P`` and ``Q`` may be ``None`` when the model only describes the features.
    """

    A: np.ndarray
    B: np.ndarray
    P: np.ndarray | None = None
    Q: np.ndarray | None = None
    x_max: float = 1.0
    q_max: float = 1.0
    a_max: float = 1.0
    b_max: float = 1.0

    def __post_init__(self):
        for name in ("A", "B", "P", "Q"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, as_matrix(val, name))
        for name in ("x_max", "q_max", "a_max", "b_max"):
            val = float(getattr(self, name))
            if not np.isfinite(val) or val < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {val}")
            object.__setattr__(self, name, val)
        if (self.P is None) != (self.Q is None):
            raise ValueError("P and Q must be given together")
        if self.P is not None:
            check_chain(("A", self.A), ("P", self.P), ("Q", self.Q), ("B", self.B))

    @property
    def n1(self) -> int:
        return self.A.shape[0]

    @property
    def n2(self) -> int:
        return self.B.shape[1]

    @property
    def r1(self) -> int:
        return self.A.shape[1]

    @property
    def r2(self) -> int:
        return self.B.shape[0]

    @property
    def r(self) -> int:
        if self.P is None:
            raise ValueError("model has no factors; rank unknown")
        return self.P.shape[1]

    @property
    def has_factors(self) -> bool:
        return self.P is not None

    def with_factors(self, P, Q) -> "ImcModel":
        return ImcModel(self.A, self.B, P, Q, self.x_max, self.q_max, self.a_max, self.b_max)


def assemble(model: ImcModel) -> np.ndarray:
    """Return the n1 x n2 product ``A @ P @ Q @ B``."""
    if not model.has_factors:
        raise ValueError("cannot assemble a model without factors P, Q")
    return product(model.A, model.P, model.Q, model.B)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_bounds(model: ImcModel, role: str = "ground_truth") -> ValidationReport:
    """List every violated max-norm assumption.

    ``role="ground_truth"`` checks ``||X||_max <= x_max / 2``; ``role="candidate"``
    checks ``||X||_max <= x_max``. Violations are reported, never raised.
    """
    if role not in ("ground_truth", "candidate"):
        raise ValueError(f"unknown role {role!r}")
    report = ValidationReport()
    checks = [("‖A‖_max ≤ A_max", model.A, model.a_max), ("‖B‖_max ≤ B_max", model.B, model.b_max)]
    if model.has_factors:
        checks += [("‖P‖_max ≤ 1", model.P, 1.0), ("‖Q‖_max ≤ Q_max", model.Q, model.q_max)]
        X = assemble(model)
        if role == "ground_truth":
            checks.append(("‖X*‖_max ≤ X_max/2", X, model.x_max / 2))
        else:
            checks.append(("‖X‖_max ≤ X_max", X, model.x_max))
    for label, M, bound in checks:
        if exceeds(max_norm(M), bound):
            report.violations.append(label)
    return report


def per_element_sq_error(x_true, x_hat) -> float:
    """``||x_true - x_hat||_F^2 / (rows * cols)``."""
    x_true = np.asarray(x_true, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x_true.shape != x_hat.shape:
        raise DimensionError(f"shape mismatch: {x_true.shape} vs {x_hat.shape}")
    diff = x_true - x_hat
    return float(np.sum(diff * diff) / diff.size)


# --- JSON model files -------------------------------------------------------

def model_to_dict(model: ImcModel) -> dict:
    out = {
        "n1": model.n1,
        "n2": model.n2,
        "r1": model.r1,
        "r2": model.r2,
        "A": model.A.tolist(),
        "B": model.B.tolist(),
        "x_max": model.x_max,
        "q_max": model.q_max,
        "a_max": model.a_max,
        "b_max": model.b_max,
    }
    if model.has_factors:
        out["r"] = model.r
        out["P"] = model.P.tolist()
        out["Q"] = model.Q.tolist()
    return out


def model_from_dict(d: dict) -> ImcModel:
    model = ImcModel(
        A=d["A"],
        B=d["B"],
        P=d.get("P"),
        Q=d.get("Q"),
        x_max=d["x_max"],
        q_max=d["q_max"],
        a_max=d["a_max"],
        b_max=d["b_max"],
    )
    declared = {k: d[k] for k in ("n1", "n2", "r1", "r2") if k in d}
    actual = {"n1": model.n1, "n2": model.n2, "r1": model.r1, "r2": model.r2}
    if model.has_factors:
        actual["r"] = model.r
        if "r" in d:
            declared["r"] = d["r"]
    for k, v in declared.items():
        if int(v) != actual[k]:
            raise DimensionError(f"declared {k}={v} but matrices give {actual[k]}")
    return model


def save_model(model: ImcModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1))


def load_model(path) -> ImcModel:
    return model_from_dict(json.loads(Path(path).read_text()))
