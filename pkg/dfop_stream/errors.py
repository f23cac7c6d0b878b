"""
Jerarquía de errores del paquete
Cada error lleva un código de máquina y el código de salida que usa la CLI
"""

from typing import Optional


class DFOPError(Exception):
    """Error base: la CLI lo imprime como una sola línea `error[<code>]: <msg>`"""

    code = "E_GENERIC"
    exit_code = 1

    def one_line(self) -> str:
        message = " ".join(str(self).split())
        return f"error[{self.code}]: {message}"


class ParameterError(DFOPError, ValueError):
    code = "E_PARAM"
    exit_code = 1


class UsageError(DFOPError):
    code = "E_USAGE"
    exit_code = 1


class DataFormatError(DFOPError):
    """Fila mal formada en un CSV; `line` es 1-based contando el encabezado"""

    code = "E_PARSE"
    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"línea {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(DFOPError):
    code = "E_SCHEMA"
    exit_code = 2


class MissingTruthError(DFOPError):
    code = "E_TRUTH"
    exit_code = 2


class DegenerateInputError(DFOPError, ValueError):
    code = "E_DEGENERATE"
    exit_code = 2


class IntegrityError(DFOPError):
    code = "E_INTEGRITY"
    exit_code = 2


class NumericFailureError(DFOPError):
    """Overflow o resultado no finito; `step` identifica el paso del flujo"""

    code = "E_NUMERIC"
    exit_code = 3

    def __init__(self, message: str, step: Optional[int] = None):
        if step is not None:
            message = f"paso {step}: {message}"
        super().__init__(message)
        self.step = step


class SingularMatrixError(NumericFailureError):
    code = "E_SINGULAR"
    exit_code = 3

    def __init__(self, message: str, pivot: Optional[int] = None, step: Optional[int] = None):
        if pivot is not None:
            message = f"{message} (pivote {pivot})"
        super().__init__(message, step=step)
        self.pivot = pivot


class VerificationError(DFOPError):
    code = "E_VERIFY"
    exit_code = 4
