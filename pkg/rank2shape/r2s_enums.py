from enum import IntEnum


class ScoreKind(IntEnum):
    VAN_DER_WAERDEN = 0
    STUDENT = 1
    POWER_EXPONENTIAL = 2
    CONSTANT = 3


class RadialFamily(IntEnum):
    GAUSSIAN = 0
    STUDENT = 1
    POWER_EXPONENTIAL = 2


class Preliminary(IntEnum):
    TYLER = 0
    GAUSSIAN = 1


class LocationMode(IntEnum):
    KNOWN = 0
    HR = 1


class EstimatorMethod(IntEnum):
    TYLER = 0
    GAUSSIAN = 1
    HR = 2
    RONESTEP = 3
