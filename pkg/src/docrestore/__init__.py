"""Full-page historical document restoration pipeline.

Three stages: damage localization fusion, vision-language content
prediction, and patch-autoregressive appearance restoration, plus a
degradation synthesizer, evaluation metrics, and a human review service.
"""

__version__ = "0.1.0"

from .model import (
    BBox,
    CharObservation,
    DamageBox,
    DamageGrade,
    LineGroup,
    PageDocument,
    ReadingRef,
    validate_page,
)

__all__ = [
    "BBox",
    "CharObservation",
    "DamageBox",
    "DamageGrade",
    "LineGroup",
    "PageDocument",
    "ReadingRef",
    "validate_page",
]
