class CvLearnError(Exception):
    def __init__(self, msg: str):
        super().__init__(msg)
        self.msg = msg


class ShapeError(CvLearnError): ...


class ValidationError(CvLearnError): ...


class InvalidStateError(ValidationError): ...


class UndefinedStateError(ValidationError): ...


class SingularityError(CvLearnError):
    def __init__(self, msg: str, condition_number: float = float("inf")):
        super().__init__(msg)
        self.condition_number = condition_number


class EngineError(CvLearnError): ...


class ComponentOverflowError(CvLearnError): ...


class CutoffError(CvLearnError):
    def __init__(self, msg: str, suggested_cutoff: int):
        super().__init__(msg)
        self.suggested_cutoff = suggested_cutoff


class UnsupportedChannelError(CvLearnError): ...


class UnsupportedClassError(CvLearnError): ...


class BudgetExhaustedError(CvLearnError): ...


class ConfigError(CvLearnError): ...


class InsufficientGridError(ConfigError): ...
