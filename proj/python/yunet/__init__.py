"""Sky segmentation and skyline extraction."""

from ._yunet import (
    ConfigError,
    DataError,
    Error,
    IoError,
    Network,
    NumericError,
    ShapeError,
    aggregate_pad,
    edge_map,
    load_network,
    main,
    pad,
    read_image,
    read_mask,
    segmentation_metrics,
    skyline,
    synth_sample,
    train,
)

UNDEFINED = -1

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "IoError",
    "Network",
    "NumericError",
    "ShapeError",
    "UNDEFINED",
    "aggregate_pad",
    "edge_map",
    "load_network",
    "main",
    "pad",
    "read_image",
    "read_mask",
    "segmentation_metrics",
    "skyline",
    "synth_sample",
    "train",
]
