"""LiDAR instance augmentation: mesh placement, ray casting and labeling."""

from instaug._core import (
    AugmentationConfig,
    Dependencies,
    EngineError,
    SensorModel,
    __version__,
    augment_dataset,
    augment_scan,
    build_manifest,
    build_prompt,
    build_remission_table,
    load_config,
    load_dependencies,
    preset_sensor,
    read_labels,
    read_point_cloud,
    write_labels,
    write_point_cloud,
)

__all__ = [
    "AugmentationConfig",
    "Dependencies",
    "EngineError",
    "SensorModel",
    "__version__",
    "augment_dataset",
    "augment_scan",
    "build_manifest",
    "build_prompt",
    "build_remission_table",
    "load_config",
    "load_dependencies",
    "preset_sensor",
    "read_labels",
    "read_point_cloud",
    "write_labels",
    "write_point_cloud",
]
