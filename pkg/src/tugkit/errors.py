"""Exception hierarchy.

Every failure that can reject a trial derives from :class:`TugError`; the
class name doubles as the ``error_kind`` written to ``batch_summary.csv``.
"""

from __future__ import annotations


class TugError(Exception):
    """Base class for all pipeline errors."""

    @property
    def kind(self) -> str:
        return type(self).__name__


# configuration / ingest
class ConfigError(TugError):
    pass


class MissingKey(ConfigError):
    pass


class InvalidValue(ConfigError):
    pass


class MalformedConfig(ConfigError):
    pass


class IngestError(TugError):
    pass


class MalformedCSV(IngestError):
    pass


class MissingColumn(IngestError):
    pass


class TooShort(IngestError):
    pass


class AllGap(IngestError):
    pass


class GapTooLong(IngestError):
    pass


# segmentation
class SegmentationError(TugError):
    pass


class StartOutsideChairZone(SegmentationError):
    pass


class NoStandExit(SegmentationError):
    pass


class NoTurnEntry(SegmentationError):
    pass


class NoTurnExit(SegmentationError):
    pass


class NoChairReturn(SegmentationError):
    pass


class EmptyPhase(SegmentationError):
    pass


# events / kinematics / coordination
class NeverMoving(TugError):
    pass


class NoLegLength(TugError):
    pass


class PhaseTooShort(TugError):
    pass


class DegenerateAxis(TugError):
    pass


class AllStationary(TugError):
    pass


# synthetic data
class InfeasibleSpec(TugError):
    pass


# cli / output
class UsageError(TugError):
    pass


class UnsupportedFeature(TugError):
    pass


class OutputExists(TugError):
    pass
