"""Type definitions for the JSON and CSV reports."""

from typing import TypedDict


class ScatteringSummary(TypedDict):
    """Summary of a whole-grid forward or inverse transform."""

    l2_in: float
    l2_out: float
    plancherel_defect: float
    max_residual: float
    mean_residual: float
    failed_points: list[list[int]]


class RoundTripReport(TypedDict):
    """Forward then inverse transform of one field."""

    forward: ScatteringSummary
    inverse: ScatteringSummary
    rel_l2_error: float


class SymmetryReport(TypedDict):
    """Relative L2 discrepancies of the transformed-data relations."""

    negation: float
    reflection: float
    conjugation_statement: float
    conjugation_proof: float
    supported_conjugation: str
    dual_data: float


class FarFieldFit(TypedDict):
    """Least-squares coefficients of a far-field fit on the annulus L/4 < |z| < L/2."""

    coefficients: list[complex]
    residual: float
    condition: float


class AsymptoticRow(TypedDict):
    """One row of the large-time table."""

    t: float
    sup_gap: float
    t_times_gap: float
    l2_conservation_defect: float


class StepRecord(TypedDict):
    """Split-step conservation telemetry."""

    step: int
    t: float
    l2_norm: float
    sup_norm: float


class CompareReport(TypedDict):
    """Inverse-scattering evolution against the split-step reference."""

    t: float
    rel_l2: float
    modulus_rel_l2: float
    l2_defect_scattering: float
    l2_defect_reference: float


class Violation(TypedDict):
    """A subspace that breaks subcriticality."""

    basis: list[list[str]]
    dimension: int
    rhs: str


class CriticalityJSON(TypedDict):
    """Serialised CriticalityReport."""

    N: int
    maps: int
    whole_space: str
    violations: list[Violation]
    checked_count: int
    verdict: str


class LambdaEstimate(TypedDict):
    """Monte-Carlo estimate of the normalised multilinear form."""

    n: int
    samples: int
    estimate: float
    stderr: float
    tail_index: float


class ExpansionFitRow(TypedDict):
    """Fitted against closed-form expansion coefficients at one point."""

    name: str
    fitted: complex
    closed_form: complex
    rel_error: float


class MomentReport(TypedDict):
    """Moment identity evaluated on a grid."""

    order: int
    integral: complex
    expected: complex
    defect: float
    ratio_to_2pi_i: complex


class CheckResult(TypedDict):
    """One verify-all acceptance check."""

    name: str
    passed: bool
    value: float
    threshold: float
    detail: str
