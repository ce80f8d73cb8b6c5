"""
Core domain types, validation and file formats for me-kit
"""
__version__ = "0.1.0"

FORMAT_VERSIONS = {
    "track_csv": 1,
    "annotation_json": 1,
    "manifest_json": 1,
    "intervals_json": 1,
    "report_json": 1,
    "checkpoint_json": 1,
}

NEUTRAL = "neutral"
