"""Exception hierarchy shared by every module of the package."""


class AttitudeError(ValueError):
    """Base class for all errors raised by :mod:`twovec`."""


class NormUnderflow(AttitudeError):
    """A zero-norm quaternion was passed where a direction is required."""


class NonUnitQuaternion(AttitudeError):
    pass


class InvalidObservation(AttitudeError):
    """Observation vectors are not finite unit vectors."""


class DegenerateBasis(AttitudeError):
    pass


class CollinearObservations(AttitudeError):
    """The two observations span no plane, so attitude is unobservable."""


class UndefinedAxis(AttitudeError):
    """The eigenaxis of a half-turn cannot be recovered from the cross product."""


class EstimationFailed(AttitudeError):
    """No frame detour produced a well-conditioned estimate."""


class DegenerateRatio(AttitudeError):
    """The perturbed unnormalized estimate vanished, so the norm ratio is undefined."""


class InvalidNoiseModel(AttitudeError):
    pass


class SingularTrueGeometry(AttitudeError):
    """Error analysis was requested at a geometry where the estimator is singular."""


class DegenerateSpectrum(AttitudeError):
    """The q-method's top eigenvalue is not separated from the next one."""
