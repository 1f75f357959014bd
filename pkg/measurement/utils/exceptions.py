# ----------------------------------------
# Exception types shared by all modules
# ----------------------------------------

from typing import Any, List, Optional


class MeasurementError(Exception):
    """Base class for every error raised by the simulator."""


class LabelCollisionError(MeasurementError):
    def __init__(self, label: str):
        super().__init__(f"Factor label '{label}' appears in both operands")
        self.label = label


class UnknownLabelError(MeasurementError):
    def __init__(self, label: str, known: Optional[List[str]] = None):
        msg = f"Unknown label '{label}'"
        if known is not None:
            msg += f" (known: {', '.join(known)})"
        super().__init__(msg)
        self.label = label


class DimensionMismatchError(MeasurementError):
    pass


class NotHermitianError(MeasurementError):
    def __init__(self, asymmetry: float):
        super().__init__(f"Operator is not Hermitian: max asymmetry {asymmetry:.3e}")
        self.asymmetry = asymmetry


class NotNormalizedError(MeasurementError):
    def __init__(self, norm: float):
        super().__init__(f"Ket is not normalized: norm {norm:.12g}")
        self.norm = norm


class InvalidStateError(MeasurementError):
    def __init__(self, diagnostics: List[Any]):
        text = "; ".join(str(d) for d in diagnostics)
        super().__init__(f"Not a valid state operator: {text}")
        self.diagnostics = diagnostics


class NotUnitaryError(MeasurementError):
    def __init__(self, defect: float):
        super().__init__(f"Operator is not unitary: |U^dag U - 1| = {defect:.3e}")
        self.defect = defect


class NotProjectorError(MeasurementError):
    def __init__(self, defect: float):
        super().__init__(f"Operator is not an orthogonal projector: defect {defect:.3e}")
        self.defect = defect


class CompletenessError(MeasurementError):
    def __init__(self, what: str, defect: float):
        super().__init__(f"{what} violated: max deviation {defect:.3e}")
        self.defect = defect


class PositivityError(MeasurementError):
    def __init__(self, label: str, min_eigenvalue: float):
        super().__init__(f"Effect '{label}' is not positive: min eigenvalue {min_eigenvalue:.3e}")
        self.label = label
        self.min_eigenvalue = min_eigenvalue


class ImpossibleOutcomeError(MeasurementError):
    def __init__(self, label: str, probability: float):
        super().__init__(f"Impossible outcome '{label}': probability {probability:.3e}")
        self.label = label
        self.probability = probability


class NonOrthogonalError(MeasurementError):
    def __init__(self, overlap: float):
        super().__init__(f"Single-particle states are not orthogonal: |<psi|phi>| = {overlap:.3e}")
        self.overlap = overlap


class AnnihilatedPreparationError(MeasurementError):
    def __init__(self, trace: float):
        super().__init__(f"Preparation annihilated by symmetrization: tr(P T P) = {trace:.3e}")
        self.trace = trace


class NumericalError(MeasurementError):
    pass


class ReductionNotTriggered(MeasurementError):
    def __init__(self):
        super().__init__("Reduction not triggered: no branch loses separation status; "
                         "Schroedinger evolution applies")


class PointerHypothesisError(MeasurementError):
    def __init__(self, meter_name: str = "meter", detail: str = "it contains no detector"):
        super().__init__(f"{meter_name} violates Pointer Hypothesis: {detail}")


class CouplingTooWeakError(MeasurementError):
    def __init__(self, overlap: float, limit: float):
        super().__init__(f"Coupling too weak for strip separation: branch overlap {overlap:.3e} "
                         f"exceeds {limit:.1e}")
        self.overlap = overlap


class SpecValidationError(MeasurementError):
    def __init__(self, diagnostics: List[Any]):
        lines = "\n".join(f"  - {d}" for d in diagnostics)
        super().__init__(f"Experiment spec is NOT valid:\n{lines}")
        self.diagnostics = diagnostics


class PipelineError(MeasurementError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {str(cause) or type(cause).__name__}")
        self.stage = stage
        self.cause = cause
